#include "support/testgen.hpp"

#include "sqf/hash.hpp"
#include "sqf/simd/kernels.hpp"

#include <doctest.h>

#include <limits>
#include <vector>

using namespace sqf;
using namespace sqf::testing;
using simd::Cmp;
using simd::KernelTable;

namespace {

constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min();
constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();

std::vector<std::int64_t> values(Rng& rng, std::size_t n)
{
    static const std::vector<std::int64_t> edges = {0, 1, -1, kMin, kMax, kMin + 1, kMax - 1, 1LL << 62, -(1LL << 62)};
    std::vector<std::int64_t> v(n);
    for (auto& x : v) {
        switch (rng.below(3)) {
        case 0: x = rng.pick(edges); break;
        case 1: x = rng.range(-4, 4); break;
        default: x = static_cast<std::int64_t>(rng.next()); break;
        }
    }
    return v;
}

std::vector<std::uint8_t> mask(Rng& rng, std::size_t n)
{
    std::vector<std::uint8_t> m(n);
    for (auto& b : m)
        b = rng.chance(0.5);
    return m;
}

// Exact reference, independent of both tables.
bool cmp_ref(std::int64_t a, std::int64_t b, Cmp op)
{
    switch (op) {
    case Cmp::Eq: return a == b;
    case Cmp::Ne: return a != b;
    case Cmp::Lt: return a < b;
    case Cmp::Le: return a <= b;
    case Cmp::Gt: return a > b;
    case Cmp::Ge: return a >= b;
    }
    return false;
}

void check_table(const KernelTable& k, std::uint64_t seed)
{
    Rng rng(seed);
    for (int round = 0; round < 400; ++round) {
        std::size_t n = rng.below(70);
        // Odd offsets into a larger buffer exercise unaligned loads.
        std::size_t off = rng.below(3);
        auto a = values(rng, n + off), b = values(rng, n + off);
        const std::int64_t* pa = a.data() + off;
        const std::int64_t* pb = b.data() + off;

        auto op = static_cast<Cmp>(rng.below(6));
        std::vector<std::uint8_t> out(n + 1, 0xAA);
        k.compare(pa, pb, n, op, out.data());
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE(out[i] == cmp_ref(pa[i], pb[i], op));
        CHECK(out[n] == 0xAA);

        std::int64_t c = n ? pb[0] : 0;
        k.compare_scalar(pa, c, n, op, out.data());
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE(out[i] == cmp_ref(pa[i], c, op));

        std::vector<std::int64_t> sum(n);
        std::vector<std::uint8_t> ovf(n);
        k.add_checked(pa, pb, n, sum.data(), ovf.data());
        for (std::size_t i = 0; i < n; ++i) {
            std::int64_t want;
            bool o = __builtin_add_overflow(pa[i], pb[i], &want);
            REQUIRE(ovf[i] == o);
            REQUIRE(sum[i] == want);
        }
        k.sub_checked(pa, pb, n, sum.data(), ovf.data());
        for (std::size_t i = 0; i < n; ++i) {
            std::int64_t want;
            bool o = __builtin_sub_overflow(pa[i], pb[i], &want);
            REQUIRE(ovf[i] == o);
            REQUIRE(sum[i] == want);
        }

        auto ma = mask(rng, n), mb = mask(rng, n);
        std::vector<std::uint8_t> m(n);
        k.mask_and(ma.data(), mb.data(), n, m.data());
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE(m[i] == (ma[i] & mb[i]));
        k.mask_or(ma.data(), mb.data(), n, m.data());
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE(m[i] == (ma[i] | mb[i]));
        k.mask_not(ma.data(), n, m.data());
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE(m[i] == !ma[i]);

        std::vector<std::uint32_t> idx(n + 1);
        auto cnt = k.mask_to_indices(ma.data(), n, idx.data());
        std::vector<std::uint32_t> want_idx;
        for (std::uint32_t i = 0; i < n; ++i)
            if (ma[i])
                want_idx.push_back(i);
        REQUIRE(cnt == want_idx.size());
        for (std::size_t i = 0; i < cnt; ++i)
            REQUIRE(idx[i] == want_idx[i]);

        std::vector<std::uint64_t> keys(n), h(n);
        for (std::size_t i = 0; i < n; ++i)
            keys[i] = static_cast<std::uint64_t>(pa[i]);
        auto ss = rng.next();
        k.hash_keys(keys.data(), n, ss, h.data());
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE(h[i] == hash::key_hash(keys[i], ss));
    }
}

} // namespace

TEST_CASE("scalar kernels match exact references")
{
    check_table(simd::scalar_kernels(), 1);
}

TEST_CASE("avx2 kernels match exact references")
{
    const KernelTable* avx = simd::avx2_kernels();
    if (!avx) {
        MESSAGE("AVX2 not available on this CPU; skipped");
        return;
    }
    CHECK(avx->name != simd::scalar_kernels().name);
    check_table(*avx, 2);
}

TEST_CASE("avx2 and scalar agree bit for bit on long random inputs")
{
    const KernelTable* avx = simd::avx2_kernels();
    if (!avx)
        return;
    const auto& sc = simd::scalar_kernels();
    Rng rng(3);
    for (int round = 0; round < 50; ++round) {
        std::size_t n = 1000 + rng.below(5000);
        auto a = values(rng, n), b = values(rng, n);
        for (int op = 0; op < 6; ++op) {
            std::vector<std::uint8_t> x(n), y(n);
            sc.compare(a.data(), b.data(), n, static_cast<Cmp>(op), x.data());
            avx->compare(a.data(), b.data(), n, static_cast<Cmp>(op), y.data());
            CHECK(x == y);
        }
        std::vector<std::int64_t> s1(n), s2(n);
        std::vector<std::uint8_t> o1(n), o2(n);
        sc.add_checked(a.data(), b.data(), n, s1.data(), o1.data());
        avx->add_checked(a.data(), b.data(), n, s2.data(), o2.data());
        CHECK(s1 == s2);
        CHECK(o1 == o2);
        std::vector<std::uint64_t> keys(a.begin(), a.end()), h1(n), h2(n);
        sc.hash_keys(keys.data(), n, 99, h1.data());
        avx->hash_keys(keys.data(), n, 99, h2.data());
        CHECK(h1 == h2);
    }
}

TEST_CASE("active table honours the environment override")
{
    const char* env = std::getenv("SQF_SIMD");
    const auto& active = simd::active_kernels();
    if (env && std::string_view(env) == "scalar")
        CHECK(active.name == simd::scalar_kernels().name);
    else if (simd::avx2_kernels())
        CHECK(active.name == simd::avx2_kernels()->name);
}
