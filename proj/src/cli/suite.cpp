#include "sqf/cli/suite.hpp"

#include "sqf/error.hpp"
#include "sqf/relcore/csv.hpp"

#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

namespace sqf {

namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::FileNotFound, fmt::format("cannot open {}", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, fmt::format("{}: {}", path.string(), e.what()));
    }
}

template <typename T>
T field(const nlohmann::json& obj, const char* key, const fs::path& where)
{
    if (!obj.contains(key))
        throw Error(ErrorCode::InvalidField, fmt::format("{}: missing `{}`", where.string(), key));
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::InvalidField, fmt::format("{}: bad `{}`", where.string(), key));
    }
}

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}
    std::int64_t range(std::int64_t lo, std::int64_t hi) // inclusive
    {
        return lo + static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::mt19937_64 rng_;
};

Schema schema_of(std::string_view header) { return parse_header(header); }

} // namespace

SuiteManifest load_manifest(const fs::path& dir)
{
    const fs::path path = dir / "manifest.json";
    auto doc = read_json(path);
    SuiteManifest m;
    m.dir = fs::absolute(dir);
    const auto& g = doc.at("generator");
    m.generator.seed = field<std::uint64_t>(g, "seed", path);
    m.generator.sales_rows = field<std::size_t>(g, "sales_rows", path);
    m.generator.customer_rows = field<std::size_t>(g, "customer_rows", path);
    m.generator.product_rows = field<std::size_t>(g, "product_rows", path);
    m.tables_dir = m.dir / field<std::string>(doc, "tables_dir", path);
    m.library = m.dir / field<std::string>(doc, "library", path);
    m.device = m.dir / field<std::string>(doc, "device", path);
    m.baseline = m.dir / field<std::string>(doc, "baseline", path);
    m.overhead_fraction_max = field<double>(doc, "overhead_fraction_max", path);
    for (const auto& q : doc.at("queries")) {
        SuiteQuery sq;
        sq.id = field<std::string>(q, "id", path);
        sq.file = m.dir / field<std::string>(q, "query", path);
        sq.tables = q.contains("tables") ? m.dir / q.at("tables").get<std::string>() : m.tables_dir;
        if (q.contains("overhead_fraction"))
            sq.overhead_fraction = q.at("overhead_fraction").get<double>();
        if (q.contains("energy_ratio"))
            sq.energy_ratio = q.at("energy_ratio").get<double>();
        if (q.contains("chosen"))
            sq.chosen = q.at("chosen").get<std::string>();
        m.queries.push_back(std::move(sq));
    }
    return m;
}

TableCatalog generate_suite_tables(const SuiteGenerator& gen)
{
    static const char* regions[] = {"north", "south", "east", "west", "central"};
    static const char* segments[] = {"retail", "wholesale", "online", "public", "partner"};

    TableCatalog out;
    Gen rng(gen.seed);

    Table customer(schema_of("cid:INT,nation:INT,credit:INT,segment:CHAR(10)"));
    customer.reserve(gen.customer_rows);
    for (std::size_t i = 0; i < gen.customer_rows; ++i) {
        Row r{static_cast<std::int64_t>(i), rng.range(0, 24), rng.range(-5000, 50000),
              std::string(segments[rng.range(0, 4)])};
        customer.append_row(r);
    }

    Table product(schema_of("pid:INT,category:INT,cost:INT,brand:CHAR(12)"));
    product.reserve(gen.product_rows);
    for (std::size_t i = 0; i < gen.product_rows; ++i) {
        Row r{static_cast<std::int64_t>(i), rng.range(0, 49), rng.range(50, 5000),
              fmt::format("brand_{:02}", rng.range(0, 99))};
        product.append_row(r);
    }

    Table sales(schema_of("id:INT,cust:INT,prod:INT,qty:INT,price:INT,day:INT,region:CHAR(8)"));
    sales.reserve(gen.sales_rows);
    const auto customers = static_cast<std::int64_t>(std::max<std::size_t>(gen.customer_rows, 1));
    const auto products = static_cast<std::int64_t>(std::max<std::size_t>(gen.product_rows, 1));
    for (std::size_t i = 0; i < gen.sales_rows; ++i) {
        Row r{static_cast<std::int64_t>(i),
              rng.range(0, customers - 1),
              rng.range(0, products - 1),
              rng.range(1, 50),
              rng.range(100, 9999),
              rng.range(0, 364),
              std::string(regions[rng.range(0, 4)])};
        sales.append_row(r);
    }

    out.emplace("customer", std::move(customer));
    out.emplace("product", std::move(product));
    out.emplace("sales", std::move(sales));
    return out;
}

void write_suite_tables(const SuiteGenerator& gen, const fs::path& out)
{
    fs::create_directories(out);
    for (const auto& [name, table] : generate_suite_tables(gen)) {
        std::ofstream f(out / (name + ".csv"), std::ios::binary);
        if (!f)
            throw Error(ErrorCode::FileNotFound, fmt::format("cannot write {}", (out / (name + ".csv")).string()));
        write_csv(table, f);
    }
}

} // namespace sqf
