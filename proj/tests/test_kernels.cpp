#include <cstring>
#include <vector>

#include "doctest.h"
#include "senca/kernels.hpp"
#include "senca/rng.hpp"

using senca::Rng;
namespace kern = senca::kern;

namespace {

std::vector<double> random_vec(Rng& rng, size_t n, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("serial and parallel kernels produce identical bits") {
    Rng rng(42);
    for (int trial = 0; trial < 3; ++trial) {
        int m = 3 + static_cast<int>(rng.next_u64() % 90);
        int k = 3 + static_cast<int>(rng.next_u64() % 90);
        int n = 3 + static_cast<int>(rng.next_u64() % 90);
        auto a = random_vec(rng, static_cast<size_t>(m) * k);
        auto b = random_vec(rng, static_cast<size_t>(k) * n);
        auto bt = random_vec(rng, static_cast<size_t>(n) * k);
        auto at = random_vec(rng, static_cast<size_t>(k) * m);
        std::vector<double> cs(static_cast<size_t>(m) * n), cp(cs.size());

        kern::serial::matmul_nn(a.data(), b.data(), cs.data(), m, k, n);
        kern::par::matmul_nn(a.data(), b.data(), cp.data(), m, k, n);
        CHECK(bits_equal(cs, cp));

        kern::serial::matmul_nt(a.data(), bt.data(), cs.data(), m, k, n);
        kern::par::matmul_nt(a.data(), bt.data(), cp.data(), m, k, n);
        CHECK(bits_equal(cs, cp));

        kern::serial::matmul_tn(at.data(), b.data(), cs.data(), m, k, n);
        kern::par::matmul_tn(at.data(), b.data(), cp.data(), m, k, n);
        CHECK(bits_equal(cs, cp));

        // Accumulating variants add onto existing content.
        auto seed_c = random_vec(rng, cs.size());
        cs = seed_c;
        cp = seed_c;
        kern::serial::matmul_nn(a.data(), b.data(), cs.data(), m, k, n, true);
        kern::par::matmul_nn(a.data(), b.data(), cp.data(), m, k, n, true);
        CHECK(bits_equal(cs, cp));

        size_t sz = static_cast<size_t>(m) * n;
        auto x = random_vec(rng, sz);
        auto y = random_vec(rng, sz);
        std::vector<double> os(sz), op(sz);

        kern::serial::add(x.data(), y.data(), os.data(), sz);
        kern::par::add(x.data(), y.data(), op.data(), sz);
        CHECK(bits_equal(os, op));

        kern::serial::mul(x.data(), y.data(), os.data(), sz);
        kern::par::mul(x.data(), y.data(), op.data(), sz);
        CHECK(bits_equal(os, op));

        kern::serial::elu(x.data(), os.data(), sz);
        kern::par::elu(x.data(), op.data(), sz);
        CHECK(bits_equal(os, op));

        kern::serial::softmax_rows(x.data(), os.data(), m, n);
        kern::par::softmax_rows(x.data(), op.data(), m, n);
        CHECK(bits_equal(os, op));

        std::vector<double> gain = random_vec(rng, n), bias = random_vec(rng, n);
        std::vector<double> hs(sz), hp(sz), is(m), ip(m);
        kern::serial::layer_norm_rows(x.data(), gain.data(), bias.data(), os.data(), hs.data(),
                                      is.data(), m, n, 1e-5);
        kern::par::layer_norm_rows(x.data(), gain.data(), bias.data(), op.data(), hp.data(),
                                   ip.data(), m, n, 1e-5);
        CHECK(bits_equal(os, op));
        CHECK(bits_equal(hs, hp));

        std::vector<double> ls(m), lp(m);
        kern::serial::logsumexp_rows(x.data(), ls.data(), m, n);
        kern::par::logsumexp_rows(x.data(), lp.data(), m, n);
        CHECK(bits_equal(ls, lp));

        std::vector<double> ns(m), np(m);
        kern::serial::l2_normalize_rows(x.data(), os.data(), ns.data(), m, n);
        kern::par::l2_normalize_rows(x.data(), op.data(), np.data(), m, n);
        CHECK(bits_equal(os, op));
        CHECK(bits_equal(ns, np));
    }
}

TEST_CASE("matmul_nn multiplies correctly") {
    // 2x3 * 3x2 hand product
    std::vector<double> a = {1, 2, 3, 4, 5, 6};
    std::vector<double> b = {7, 8, 9, 10, 11, 12};
    std::vector<double> c(4);
    kern::serial::matmul_nn(a.data(), b.data(), c.data(), 2, 3, 2);
    CHECK(c[0] == doctest::Approx(58));
    CHECK(c[1] == doctest::Approx(64));
    CHECK(c[2] == doctest::Approx(139));
    CHECK(c[3] == doctest::Approx(154));
}

TEST_CASE("matmul transpose variants agree with explicit transposition") {
    Rng rng(11);
    int m = 5, k = 7, n = 4;
    auto a = random_vec(rng, static_cast<size_t>(m) * k);
    auto b = random_vec(rng, static_cast<size_t>(k) * n);

    std::vector<double> bt(static_cast<size_t>(n) * k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < n; ++j) bt[static_cast<size_t>(j) * k + i] = b[static_cast<size_t>(i) * n + j];
    std::vector<double> at(static_cast<size_t>(k) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) at[static_cast<size_t>(j) * m + i] = a[static_cast<size_t>(i) * k + j];

    std::vector<double> ref(static_cast<size_t>(m) * n), alt(ref.size());
    kern::serial::matmul_nn(a.data(), b.data(), ref.data(), m, k, n);
    kern::serial::matmul_nt(a.data(), bt.data(), alt.data(), m, k, n);
    for (size_t i = 0; i < ref.size(); ++i) CHECK(alt[i] == doctest::Approx(ref[i]));
    kern::serial::matmul_tn(at.data(), b.data(), alt.data(), m, k, n);
    for (size_t i = 0; i < ref.size(); ++i) CHECK(alt[i] == doctest::Approx(ref[i]));
}

TEST_CASE("thread cap is adjustable") {
    int original = kern::max_threads();
    kern::set_max_threads(1);
    CHECK(kern::max_threads() == 1);
    kern::set_max_threads(original);
    CHECK(kern::max_threads() == original);
}
