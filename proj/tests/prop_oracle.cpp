#include "support/testgen.hpp"

#include "sqf/error.hpp"
#include "sqf/frontend/parser.hpp"

#include <doctest.h>

using namespace sqf;
using namespace sqf::testing;

TEST_CASE("every candidate agrees with the oracle on random queries")
{
    const auto lib = full_library();
    const auto dev = test_device();
    std::size_t executed = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Rng rng(seed);
        auto data = random_dataset(rng, {.max_rows = 300}, {.max_rows = 300});
        auto sql = random_query(rng, data.tables, {});
        CAPTURE(sql);
        BoundPlan bp = sqf::bind(parse_query(sql), data.catalog);
        std::vector<CandidatePipeline> cands;
        try {
            cands = enumerate_pipelines(bp, lib, dev, data.stats);
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::NoCandidates);
            continue;
        }
        auto expected = run_oracle(bp, data.tables);
        FabricState fabric(dev);
        for (const auto& c : cands) {
            CAPTURE(c.tag());
            std::string why;
            auto got = run_candidate(bp, c, data.tables, fabric, dev);
            CHECK_MESSAGE(agrees(bp, got, expected, &why), why);
            ++executed;
        }
    }
    CHECK(executed > 300);
}
