// Times the serial reference kernels against their OpenMP counterparts and
// checks that both produce identical bits.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "senca/kernels.hpp"
#include "senca/rng.hpp"

using senca::Rng;
namespace kern = senca::kern;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    auto start = Clock::now();
    for (int r = 0; r < reps; ++r) fn();
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count() / reps;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> random_vec(Rng& rng, size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

void report(const char* name, double serial_ms, double par_ms, bool identical) {
    std::printf("%-24s %10.3f ms %10.3f ms %8.2fx   %s\n", name, serial_ms, par_ms,
                serial_ms / par_ms, identical ? "bits equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    kern::init_threads_from_env();
    int n = argc > 1 ? std::atoi(argv[1]) : 512;
    int reps = argc > 2 ? std::atoi(argv[2]) : 5;
    std::printf("kernel benchmark, %dx%d matrices, %d reps, %d threads\n%-24s %13s %13s %9s\n",
                n, n, reps, kern::max_threads(), "kernel", "serial", "openmp", "speedup");

    Rng rng(7);
    size_t nn = static_cast<size_t>(n) * n;
    std::vector<double> a = random_vec(rng, nn);
    std::vector<double> b = random_vec(rng, nn);
    std::vector<double> out_s(nn), out_p(nn);
    std::vector<double> aux_s(nn), aux_p(nn);
    std::vector<double> small_s(n), small_p(n);
    std::vector<double> gain(n, 1.0), bias(n, 0.0);

    double ts, tp;

    ts = time_ms([&] { kern::serial::matmul_nn(a.data(), b.data(), out_s.data(), n, n, n); },
                 reps);
    tp = time_ms([&] { kern::par::matmul_nn(a.data(), b.data(), out_p.data(), n, n, n); },
                 reps);
    report("matmul_nn", ts, tp, bits_equal(out_s, out_p));

    ts = time_ms([&] { kern::serial::matmul_nt(a.data(), b.data(), out_s.data(), n, n, n); },
                 reps);
    tp = time_ms([&] { kern::par::matmul_nt(a.data(), b.data(), out_p.data(), n, n, n); },
                 reps);
    report("matmul_nt", ts, tp, bits_equal(out_s, out_p));

    ts = time_ms([&] { kern::serial::matmul_tn(a.data(), b.data(), out_s.data(), n, n, n); },
                 reps);
    tp = time_ms([&] { kern::par::matmul_tn(a.data(), b.data(), out_p.data(), n, n, n); },
                 reps);
    report("matmul_tn", ts, tp, bits_equal(out_s, out_p));

    ts = time_ms([&] { kern::serial::softmax_rows(a.data(), out_s.data(), n, n); }, reps);
    tp = time_ms([&] { kern::par::softmax_rows(a.data(), out_p.data(), n, n); }, reps);
    report("softmax_rows", ts, tp, bits_equal(out_s, out_p));

    ts = time_ms(
        [&] {
            kern::serial::layer_norm_rows(a.data(), gain.data(), bias.data(), out_s.data(),
                                          aux_s.data(), small_s.data(), n, n, 1e-5);
        },
        reps);
    tp = time_ms(
        [&] {
            kern::par::layer_norm_rows(a.data(), gain.data(), bias.data(), out_p.data(),
                                       aux_p.data(), small_p.data(), n, n, 1e-5);
        },
        reps);
    report("layer_norm_rows", ts, tp, bits_equal(out_s, out_p));

    ts = time_ms([&] { kern::serial::elu(a.data(), out_s.data(), nn); }, reps);
    tp = time_ms([&] { kern::par::elu(a.data(), out_p.data(), nn); }, reps);
    report("elu", ts, tp, bits_equal(out_s, out_p));

    ts = time_ms([&] { kern::serial::add(a.data(), b.data(), out_s.data(), nn); }, reps);
    tp = time_ms([&] { kern::par::add(a.data(), b.data(), out_p.data(), nn); }, reps);
    report("add", ts, tp, bits_equal(out_s, out_p));

    ts = time_ms([&] { kern::serial::logsumexp_rows(a.data(), small_s.data(), n, n); }, reps);
    tp = time_ms([&] { kern::par::logsumexp_rows(a.data(), small_p.data(), n, n); }, reps);
    report("logsumexp_rows", ts, tp, bits_equal(small_s, small_p));

    return 0;
}
