#include <doctest.h>

#include <cmath>
#include <random>

#include "sigdet/detectors.hpp"

using namespace sigdet;

namespace {

// All root-to-level-h paths as edge lists, enumerated without the library's
// heap arithmetic: children of node v (0 = root) are numbered 2v+1, 2v+2 and
// the edge into node u is u - 1.
std::vector<std::vector<std::size_t>> all_paths(int h) {
  std::vector<std::vector<std::size_t>> out;
  for (std::uint64_t bits = 0; bits < (1ULL << h); ++bits) {
    std::vector<std::size_t> path;
    std::size_t node = 0;
    for (int l = 0; l < h; ++l) {
      node = 2 * node + 1 + ((bits >> l) & 1ULL);
      path.push_back(node - 1);
    }
    out.push_back(path);
  }
  return out;
}

std::vector<cplx> gaussian(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<cplx> v(n);
  for (auto &x : v)
    x = g(eng);
  return v;
}

} // namespace

TEST_CASE("llr_one_point") {
  const std::vector<cplx> x(100, 1.0), zero(100, 0.0);
  const auto sched = CheckpointSchedule::linear(100, 4);
  const auto a = llr_one_point(x, x, sched);
  CHECK(a.verdict == Verdict::signal);
  CHECK(a.final_statistic() == doctest::Approx(50.0));
  for (auto [k, s] : a.trajectory)
    CHECK(s == doctest::Approx(static_cast<double>(k) / 2.0));
  const auto b = llr_one_point(x, zero, sched);
  CHECK(b.verdict == Verdict::noise);
  CHECK(b.final_statistic() == doctest::Approx(-50.0));
  CHECK_THROWS_AS(llr_one_point(zero, x, sched), PreconditionError);

  // x_n = 1, N = 10^4: separation ~50 standard deviations.
  const std::vector<cplx> big(10000, 1.0);
  const auto single = CheckpointSchedule::single(10000);
  int errors = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const RngStream s{101, t};
    errors += llr_one_point(big, observe(Signal{ScalarField::real, big}, s, ScalarField::real).values, single).verdict != Verdict::signal;
    errors += llr_one_point(big, observe_noise(10000, s.fork(1), ScalarField::real).values, single).verdict != Verdict::noise;
  }
  CHECK(errors == 0);
}

TEST_CASE("checkpoint schedules") {
  CHECK_THROWS_AS(CheckpointSchedule(std::vector<std::size_t>{}), ParameterError);
  CHECK_THROWS_AS(CheckpointSchedule(std::vector<std::size_t>{3, 3}), ParameterError);
  CHECK(CheckpointSchedule::linear(10, 5).checkpoints() == std::vector<std::size_t>{2, 4, 6, 8, 10});
}

TEST_CASE("energy detector") {
  const auto one = Amplitude::constant(1.0);
  Observation z{std::vector<cplx>(10, 0.0), ScalarField::complex, 10, {}, {}};
  const auto r = energy_detector(one, z, CheckpointSchedule::single(10));
  CHECK(r.final_statistic() == doctest::Approx(-25.0));
  CHECK(r.verdict == Verdict::noise);
  z.field = ScalarField::real;
  CHECK_THROWS_AS(energy_detector(one, z, CheckpointSchedule::single(10)), FieldError);

  // Clipping: sigma = 3 behaves like sigma = 1.
  Observation z2{std::vector<cplx>(10, 0.0), ScalarField::complex, 10, {}, {}};
  CHECK(energy_detector(Amplitude::constant(3.0), z2, CheckpointSchedule::single(10)).final_statistic() ==
        doctest::Approx(-25.0));

  // E S_N = -N/2 under pure noise with sigma = 1; Var S_N = 4N.
  const std::size_t n = 10000, trials = 200;
  double sum = 0.0, sum2 = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto s = energy_detector(one, observe_noise(n, RngStream{77, t}, ScalarField::complex),
                                   CheckpointSchedule::single(n))
                       .final_statistic();
    sum += s;
    sum2 += s * s;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sum2 / trials - mean * mean) / (trials - 1));
  CHECK(std::abs(mean + n / 2.0) < 3.0 * se);
}

TEST_CASE("energy schedule") {
  const auto s = build_energy_schedule(Amplitude::constant(1.0), 5);
  CHECK(s.checkpoints() == std::vector<std::size_t>{1, 4, 9, 16, 25});
  const auto p = build_energy_schedule(Amplitude::power_law(1.0, 0.125), 3);
  CHECK(p.checkpoints().front() == 1);
  CHECK_THROWS_AS(build_energy_schedule(Amplitude::power_law(1.0, 1.0), 3, 100000), SizeError);
}

TEST_CASE("generalized likelihood detector") {
  const std::vector<cplx> x(50, 1.0), zero(50, 0.0);
  const CandidateSet grid({Signal{ScalarField::real, x}});
  const auto sched = CheckpointSchedule::linear(50, 5);
  CHECK(generalized_llr_detector(grid, x, sched, 0.1).verdict == Verdict::signal);
  const auto r = generalized_llr_detector(grid, zero, sched, 0.1);
  CHECK(r.verdict == Verdict::noise);
  CHECK(r.final_statistic() == doctest::Approx(50.0));
  CHECK_THROWS_AS(generalized_llr_detector(CandidateSet{}, x, sched, 0.1), ParameterError);
  CHECK(grid.distance_to_zero(0) == doctest::Approx(1.0 - std::ldexp(1.0, -50)));

  // Tree grid at delta = 3, depth 12: certificate log 2 / 9 < 1/8.
  const int h = 12;
  const double delta = 3.0;
  const SpaceDescriptor desc{space::TreeTrail{delta, h}};
  std::vector<Signal> signals;
  for (std::uint64_t b = 0; b < (1ULL << h); ++b) {
    params::TreePath p;
    for (int l = 0; l < h; ++l)
      p.bits.push_back(static_cast<std::uint8_t>((b >> l) & 1));
    signals.push_back(generate_signal(desc, SignalParams{p}, tree_edge_count(h)));
  }
  const CandidateSet tree_grid(signals);
  std::vector<std::size_t> cps;
  for (int l = 1; l <= h; ++l)
    cps.push_back(tree_edge_count(l));
  const CheckpointSchedule level_ends(cps);
  int miss = 0, false_alarm = 0;
  std::mt19937_64 pick(3);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const auto &x = signals[pick() % signals.size()];
    miss += generalized_llr_detector(tree_grid, observe(x, RngStream{55, t}, ScalarField::real).values,
                                     level_ends, 0.1, h - 1)
                .verdict != Verdict::signal;
    false_alarm += generalized_llr_detector(tree_grid,
                                            observe_noise(tree_edge_count(h), RngStream{56, t}, ScalarField::real).values,
                                            level_ends, 0.1, h - 1)
                       .verdict != Verdict::noise;
  }
  CHECK(miss <= 2);
  CHECK(false_alarm <= 2);
}

TEST_CASE("volume growth certificate") {
  const auto rad = volume_growth_certificate(SpaceDescriptor{space::Rademacher{Amplitude::constant(1.0)}}, {100});
  CHECK(rad[0].ratio == doctest::Approx(std::log(2.0)));
  CHECK_FALSE(certificate_holds(rad));

  const int h = 10;
  const auto tree = volume_growth_certificate(SpaceDescriptor{space::TreeTrail{3.0, h}},
                                              {tree_edge_count(4), tree_edge_count(h)});
  for (const auto &row : tree)
    CHECK(row.ratio == doctest::Approx(std::log(2.0) / 9.0).epsilon(1e-14));
  CHECK(certificate_holds(tree));

  const auto w = volume_growth_certificate(SpaceDescriptor{space::Walsh{Amplitude::power_law(4.0, 0.5, 1.0)}}, {1024});
  CHECK(w[0].ratio < 0.125);
  CHECK(certificate_holds(w));

  const auto sc = volume_growth_certificate(scaled(2.0, SpaceDescriptor{space::TreeTrail{1.5, 8}}), {tree_edge_count(8)});
  CHECK(sc[0].ratio == doctest::Approx(std::log(2.0) / 9.0).epsilon(1e-14));

  CHECK_THROWS_AS(volume_growth_certificate(SpaceDescriptor{space::Trigonometric{Amplitude::constant(1.0)}}, {10}),
                  UnsupportedError);
}

TEST_CASE("tree max path") {
  const int h = 4;
  const std::size_t edges = tree_edge_count(h);
  CHECK(tree_depth_of(edges) == h);
  CHECK_THROWS_AS(tree_depth_of(7), SizeError);

  const std::vector<cplx> zero(edges, 0.0);
  const auto r0 = tree_max_path_detector(zero, 1.0, {h});
  CHECK(r0.final_statistic() == 0.0);
  CHECK(r0.verdict == Verdict::noise);

  // Brute force over all paths.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto z = gaussian(edges, seed);
    for (int d = 1; d <= h; ++d) {
      double best = -1e300;
      for (const auto &p : all_paths(d)) {
        double s = 0.0;
        for (auto e : p)
          s += z[e].real();
        best = std::max(best, s);
      }
      CHECK(tree_max_path_sum(z, d) == doctest::Approx(best).epsilon(1e-14));
    }
  }

  // Noiseless path sits exactly on the plain threshold.
  const SpaceDescriptor d{space::TreeTrail{1.3, h}};
  const auto x = generate_signal(d, SignalParams{params::TreePath{{1, 0, 0, 1}}}, edges);
  TreeDetectorOptions plain;
  plain.rule = TreeDetectorOptions::Rule::plain;
  const auto r = tree_max_path_detector(x.values, 1.3, {h}, plain);
  CHECK(r.verdict == Verdict::signal);
  CHECK_THROWS_AS(tree_max_path_detector(x.values, 1.3, {h + 1}), SizeError);

  // Union-bound level: 2^h Phibar(tau / sqrt h) = alpha.
  for (int hh : {4, 10, 16}) {
    const double tau = tree_union_bound_threshold(hh, 0.05);
    CHECK(std::ldexp(normal_sf(tau / std::sqrt(hh)), hh) == doctest::Approx(0.05).epsilon(1e-9));
  }
}

TEST_CASE("tree likelihood recursion equals brute force") {
  for (int h = 1; h <= 4; ++h)
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto z = gaussian(tree_edge_count(h), 100 + seed, 1.5);
      for (double delta : {0.0, 0.4, 1.0, 2.5}) {
        double acc = 0.0;
        const auto paths = all_paths(h);
        for (const auto &p : paths) {
          double s = 0.0;
          for (auto e : p)
            s += z[e].real();
          acc += std::exp(delta * s - delta * delta * h / 2.0);
        }
        acc /= static_cast<double>(paths.size());
        const double f = tree_likelihood_martingale(z, delta, h);
        CHECK(std::abs(f - acc) <= 1e-12 * acc);
      }
    }
  const std::vector<cplx> zero(2, 0.0);
  CHECK(tree_likelihood_martingale(zero, 0.7, 1) == doctest::Approx(std::exp(-0.245)).epsilon(1e-15));
  // Deep trees stay finite in log space.
  const auto z = gaussian(tree_edge_count(20), 9);
  CHECK(std::isfinite(tree_log_likelihood(z, 3.0, 20)));
}

TEST_CASE("f_k estimators") {
  const std::vector<cplx> x(4, 1.0);
  const auto est = martingale_fk_monte_carlo(point_mass_prior(x), x, 4, 10, RngStream{1, 1});
  CHECK(est.estimate == doctest::Approx(std::exp(2.0)).epsilon(1e-14));
  CHECK(est.std_error == 0.0);

  // Exact Rademacher f_k equals brute-force average over all sign vectors.
  const auto sigma = Amplitude::power_law(1.2, 0.25);
  const auto z = gaussian(8, 4);
  double acc = 0.0;
  for (int b = 0; b < 256; ++b) {
    double s = 0.0;
    for (int n = 1; n <= 8; ++n) {
      const double xn = sigma(n) * (((b >> (n - 1)) & 1) ? -1.0 : 1.0);
      s += -xn * xn / 2.0 + xn * z[n - 1].real();
    }
    acc += std::exp(s);
  }
  CHECK(rademacher_likelihood(sigma, z, 8) == doctest::Approx(acc / 256.0).epsilon(1e-12));

  const auto m = mean_of_exp({0.5, 0.5, 0.5});
  CHECK(m.estimate == doctest::Approx(std::exp(0.5)).epsilon(1e-15));
  CHECK(m.std_error == 0.0);
  CHECK_THROWS_AS(mean_of_exp({1.0}), ParameterError);
}

TEST_CASE("shell energy detector") {
  const std::vector<cplx> zero(100, 0.0), two(100, 2.0);
  CHECK(shell_energy_detector(zero, 100).verdict == Verdict::noise);
  CHECK(shell_energy_detector(two, 100).verdict == Verdict::signal);
  CHECK_THROWS_AS(shell_energy_detector(zero, 0), ParameterError);
  // Margin c/2 for the c = 1 shell; the default 3/sqrt(N) is only ~2.1 noise
  // s.d. and false-alarms about Phibar(3/sqrt 2) of the time.
  int errors = 0, default_fa = 0;
  std::mt19937_64 eng(8);
  for (std::uint64_t t = 0; t < 500; ++t) {
    Signal x{ScalarField::real, std::vector<cplx>(10000)};
    for (auto &v : x.values)
      v = (eng() >> 63) ? 1.0 : -1.0;
    errors += shell_energy_detector(observe(x, RngStream{31, t}, ScalarField::real).values, 10000, 0.5).verdict != Verdict::signal;
    const auto noise = observe_noise(10000, RngStream{32, t}, ScalarField::real).values;
    errors += shell_energy_detector(noise, 10000, 0.5).verdict != Verdict::noise;
    default_fa += shell_energy_detector(noise, 10000).verdict != Verdict::noise;
  }
  CHECK(errors == 0);
  CHECK(default_fa <= 20); // expected ~8.5
}

TEST_CASE("walsh likelihood detector") {
  const auto sigma = Amplitude::power_law(3.0, 0.5, 1.0);
  const SpaceDescriptor d{space::Walsh{sigma}};
  const auto x = generate_signal(d, SignalParams{params::WalshSigns{{1, -1, -1, 1, 1, -1, 1, 1, -1, 1}}}, 1024);
  CHECK(walsh_gllr_detector(sigma, x.values, 1024).verdict == Verdict::signal);
  const std::vector<cplx> zero(1024, 0.0);
  CHECK(walsh_gllr_detector(sigma, zero, 1024).verdict == Verdict::noise);
  CHECK_THROWS_AS(walsh_gllr_detector(sigma, zero, 1000), ParameterError);
}
