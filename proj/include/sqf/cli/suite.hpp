#pragma once

#include "sqf/engine/engine.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sqf {

struct SuiteQuery {
    std::string id;
    std::filesystem::path file;   // absolute
    std::filesystem::path tables; // absolute
    /// Values pinned from the calculus for the auto strategy.
    std::optional<double> overhead_fraction;
    std::optional<double> energy_ratio;
    std::optional<std::string> chosen;
};

struct SuiteGenerator {
    std::uint64_t seed = 0;
    std::size_t sales_rows = 0;
    std::size_t customer_rows = 0;
    std::size_t product_rows = 0;
};

struct SuiteManifest {
    std::filesystem::path dir;
    SuiteGenerator generator;
    std::filesystem::path tables_dir; // absolute
    std::filesystem::path library;
    std::filesystem::path device;
    std::filesystem::path baseline;
    double overhead_fraction_max = 0.05;
    std::vector<SuiteQuery> queries;
};

/// Reads DIR/manifest.json. Paths inside are relative to DIR.
SuiteManifest load_manifest(const std::filesystem::path& dir);

/// Deterministic star schema: sales (fact), customer, product. Uses
/// mt19937_64 and modulo reduction so the bytes do not depend on the
/// standard library's distributions.
TableCatalog generate_suite_tables(const SuiteGenerator& gen);

/// Writes <name>.csv for every generated table into `out`.
void write_suite_tables(const SuiteGenerator& gen, const std::filesystem::path& out);

} // namespace sqf
