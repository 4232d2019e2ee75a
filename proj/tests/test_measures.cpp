#include <doctest.h>

#include <cmath>
#include <random>

#include "sigdet/measures.hpp"

using namespace sigdet;

namespace {

CoefficientVector walsh_of(const MeasureModel &m, std::size_t count) {
  return transform_measure(m, Basis::walsh(), count);
}

CoefficientVector random_walsh(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> g;
  CoefficientVector y{Basis::walsh(), std::vector<cplx>(count)};
  for (auto &v : y.values)
    v = cplx(g(eng), g(eng));
  return y;
}

// T_I(y) by direct integration of each base-2 Walsh function over the
// rank-`fine` cells of I.
cplx brute_functional(const std::vector<DyadicInterval> &cover, const CoefficientVector &y, int fine) {
  cplx acc = 0.0;
  for (const auto &iv : cover) {
    const std::uint64_t cells = std::uint64_t{1} << (fine - iv.rank);
    for (std::size_t n = 0; n < y.values.size(); ++n) {
      cplx c = 0.0;
      for (std::uint64_t j = 0; j < cells; ++j) {
        const double t = std::ldexp(static_cast<double>(iv.position * cells + j) + 0.5, -fine);
        c += std::ldexp(1.0, -fine) * walsh_function(2, n, t);
      }
      acc += std::conj(c) * y.values[n];
    }
  }
  return acc;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i)
    r = r * (n - k + i) / i;
  return r;
}

} // namespace

TEST_CASE("dyadic covers") {
  const DyadicCover c({{1, 0}, {2, 2}});
  CHECK(c.measure() == 0.75);
  CHECK(c.alpha_budget(0.5) == doctest::Approx(std::sqrt(0.5) + 0.5));
  CHECK(c.min_rank() == 1);
  CHECK(c.max_rank() == 2);
  CHECK_THROWS_AS(DyadicCover({{1, 0}, {2, 1}}), ParameterError);
  CHECK_THROWS_AS(DyadicCover({{2, 4}}), ParameterError);
  CHECK(DyadicCover::prefix(3).measure() == 0.125);
  CHECK(DyadicInterval{1, 1}.contains(DyadicInterval{3, 5}));
}

TEST_CASE("transform_measure") {
  const MeasureModel delta0{AtomicMeasure{{{0.0, 1.0}}}};
  for (auto v : transform_measure(delta0, Basis::fourier(), 9).values)
    CHECK(v == cplx(1.0));

  CantorTree t;
  t.q = 3;
  t.p = 2;
  t.depth = 3;
  t.levels = {{0}, {0, 2}, {0, 2, 6, 8}, {0, 1, 6, 7, 18, 20, 24, 26}};
  validate(t);
  const auto y = transform_measure(MeasureModel{t}, Basis::walsh(3), 27);
  CHECK(y.values[0].real() == doctest::Approx(1.0).epsilon(1e-14));

  // Partial sums phi_k equal (q/p)^k on the chosen rank-k cells, 0 elsewhere.
  for (int k = 1; k <= 3; ++k) {
    const auto c = cantor_walsh_coefficients_at_rank(t, k);
    const auto phi = walsh_synthesis(3, k, c);
    const double level = std::pow(1.5, k);
    for (std::size_t j = 0; j < phi.size(); ++j) {
      const bool chosen = std::binary_search(t.levels[k].begin(), t.levels[k].end(), j);
      CHECK(std::abs(phi[j] - (chosen ? level : 0.0)) < 1e-12);
    }
  }
  CHECK_THROWS_AS(transform_measure(MeasureModel{t}, Basis::walsh(2), 8), ParameterError);
}

TEST_CASE("integrate_functional") {
  CoefficientVector y{Basis::walsh(), {2.0, 0.0, 0.0, 0.0}};
  CHECK(integrate_functional(DyadicCover({{1, 0}}), y) == cplx(1.0));
  const MeasureModel delta0{AtomicMeasure{{{0.0, 1.0}}}};
  CHECK(std::abs(integrate_functional(DyadicCover::full(), walsh_of(delta0, 16)) - 1.0) < 1e-15);

  // Against direct integration of the Walsh functions.
  const auto r = random_walsh(16, 3);
  const std::vector<DyadicInterval> mixed{{1, 1}, {3, 1}, {4, 0}};
  CHECK(std::abs(integrate_functional(DyadicCover(mixed), r) - brute_functional(mixed, r, 4)) < 1e-12);

  // Additivity over rank layers and linearity.
  cplx layers = 0.0;
  for (const auto &iv : mixed)
    layers += integrate_functional(DyadicCover({iv}), r);
  CHECK(std::abs(integrate_functional(DyadicCover(mixed), r) - layers) < 1e-13);
  const auto r2 = random_walsh(16, 4);
  CoefficientVector comb{Basis::walsh(), std::vector<cplx>(16)};
  const cplx a{0.3, -1.2}, b{2.0, 0.5};
  for (std::size_t i = 0; i < 16; ++i)
    comb.values[i] = a * r.values[i] + b * r2.values[i];
  const DyadicCover e(mixed);
  CHECK(std::abs(integrate_functional(e, comb) - (a * integrate_functional(e, r) + b * integrate_functional(e, r2))) < 1e-12);

  // Noise variance 2 mes(E).
  CoefficientVector zero{Basis::walsh(), std::vector<cplx>(4, 0.0)};
  const DyadicCover quarter({{2, 1}});
  double acc = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t)
    acc += std::norm(integrate_functional(quarter, add_noise(zero, RngStream{7, static_cast<std::uint64_t>(t)})));
  CHECK(acc / trials == doctest::Approx(0.5).epsilon(0.05));

  // Fourier basis: the full circle picks out y_0.
  CoefficientVector f{Basis::fourier(), {0.7, 3.0, -2.0, 1.0, 5.0}};
  CHECK(std::abs(integrate_functional(DyadicCover::full(), f) - 0.7) < 1e-12);
}

TEST_CASE("noise variance over several covers") {
  const std::vector<DyadicCover> covers{
      DyadicCover({{1, 0}}), DyadicCover({{2, 3}}), DyadicCover({{3, 0}, {3, 5}}),
      DyadicCover({{1, 1}, {2, 1}}), DyadicCover({{4, 2}, {4, 9}, {2, 3}}), DyadicCover({{4, 0}}),
      DyadicCover({{3, 7}}), DyadicCover({{2, 0}, {3, 4}, {4, 12}}), DyadicCover::full(),
      DyadicCover({{1, 0}, {4, 8}})};
  CoefficientVector zero{Basis::walsh(), std::vector<cplx>(16, 0.0)};
  const int trials = 10000;
  std::vector<double> acc(covers.size(), 0.0);
  for (int t = 0; t < trials; ++t) {
    const auto y = add_noise(zero, RngStream{8, static_cast<std::uint64_t>(t)});
    for (std::size_t i = 0; i < covers.size(); ++i)
      acc[i] += std::norm(integrate_functional(covers[i], y));
  }
  for (std::size_t i = 0; i < covers.size(); ++i)
    CHECK(acc[i] / trials == doctest::Approx(2.0 * covers[i].measure()).epsilon(0.05));
}

TEST_CASE("known support recovery") {
  const MeasureModel delta0{AtomicMeasure{{{0.0, 1.0}}}};
  std::vector<DyadicCover> covers;
  for (int rank : {1, 4, 9, 10})
    covers.push_back(DyadicCover::prefix(rank));
  const auto y = walsh_of(delta0, 1024);
  const auto r = known_support_recovery(y, covers);
  for (auto v : r.trajectory)
    CHECK(std::abs(v - 1.0) < 1e-12);

  int bad_signal = 0, bad_noise = 0;
  CoefficientVector zero{Basis::walsh(), std::vector<cplx>(1024, 0.0)};
  for (std::uint64_t t = 0; t < 500; ++t) {
    bad_signal += std::abs(known_support_recovery(add_noise(y, RngStream{9, t}), covers).value - 1.0) > 0.15;
    bad_noise += std::abs(known_support_recovery(add_noise(zero, RngStream{10, t}), covers).value) > 0.15;
  }
  CHECK(bad_signal <= 5);
  CHECK(bad_noise <= 5);

  // mes(U_2) = 1/2 > 1/4.
  CHECK_THROWS_AS(known_support_recovery(y, {DyadicCover::prefix(1), DyadicCover::prefix(1)}), ParameterError);
}

TEST_CASE("dimension constrained recovery examples") {
  const MeasureModel atom{AtomicMeasure{{{21.0 / 64.0, 1.0}}}};
  const auto y = walsh_of(atom, 64);
  const auto r = dimension_constrained_recovery(y, 0.4, 1, 6, 1000);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.in_regime);

  CoefficientVector zero{Basis::walsh(), std::vector<cplx>(64, 0.0)};
  const auto z = dimension_constrained_recovery(zero, 0.4, 1, 6, 1000);
  CHECK(z.value == 0.0);
  CHECK(z.cover.empty());

  const MeasureModel pair{AtomicMeasure{{{21.0 / 64.0, 1.0}, {22.0 / 64.0, -1.0}}}};
  const auto rp = dimension_constrained_recovery(walsh_of(pair, 64), 0.4, 1, 6, 1000);
  CHECK(rp.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rp.cover.measure() <= 1.0);

  const auto parts = dimension_constrained_parts(walsh_of(pair, 64), 0.4, 1, 6, 1000);
  CHECK(parts[0] == doctest::Approx(1.0));
  CHECK(parts[1] == doctest::Approx(1.0));
  CHECK(std::abs(parts[2]) < 1e-12);
  CHECK(std::abs(parts[3]) < 1e-12);

  CHECK_FALSE(dimension_constrained_recovery(zero, 0.6, 1, 6, 1000).in_regime);
  CHECK_THROWS_AS(dimension_constrained_recovery(zero, 0.4, 1, 6, 2), ParameterError);
}

TEST_CASE("dimension constrained DP matches enumeration") {
  // Ranks 1..3: 14 intervals, every disjoint subset enumerated.
  std::vector<DyadicInterval> all;
  for (int r = 1; r <= 3; ++r)
    for (std::uint64_t j = 0; j < (1u << r); ++j)
      all.push_back({r, j});
  const double alpha = 0.4;
  const std::size_t res = 64;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    CoefficientVector y{Basis::walsh(), std::vector<cplx>(8)};
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> g;
    for (auto &v : y.values)
      v = g(eng);
    std::vector<double> score(all.size());
    std::vector<std::size_t> cost(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
      score[i] = brute_functional({all[i]}, y, 3).real();
      cost[i] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::pow(2.0, -alpha * all[i].rank) * res)));
    }
    double best = 0.0;
    for (std::uint32_t mask = 1; mask < (1u << all.size()); ++mask) {
      std::size_t units = 0;
      double s = 0.0;
      bool ok = true;
      for (std::size_t i = 0; i < all.size() && ok; ++i) {
        if (!((mask >> i) & 1))
          continue;
        units += cost[i];
        s += score[i];
        for (std::size_t k = 0; k < i && ok; ++k)
          if (((mask >> k) & 1) && (all[k].contains(all[i]) || all[i].contains(all[k])))
            ok = false;
      }
      if (ok && units <= res)
        best = std::max(best, s);
    }
    const auto r = dimension_constrained_recovery(y, alpha, 1, 3, res);
    CHECK(r.value == doctest::Approx(best).epsilon(1e-12));
    CHECK(r.units_used <= res);
    CHECK(std::abs(integrate_functional(r.cover, y).real() - r.value) < 1e-12);
  }
}

TEST_CASE("dyadic unions of bounded measure") {
  for (int n = 1; n <= 4; ++n)
    for (double alpha : {0.25, 0.5, 0.75}) {
      const int cells = 1 << n;
      const double bound = std::pow(2.0, -(1.0 - alpha) * n);
      std::uint64_t count = 0;
      for (std::uint32_t mask = 0; mask < (1u << cells); ++mask) {
        std::vector<DyadicInterval> ivs;
        for (int j = 0; j < cells; ++j)
          if ((mask >> j) & 1)
            ivs.push_back({n, static_cast<std::uint64_t>(j)});
        count += DyadicCover(ivs).measure() <= bound + 1e-15;
      }
      double expect = 0.0;
      for (int j = 0; j <= static_cast<int>(std::floor(std::pow(2.0, alpha * n) + 1e-12)) && j <= cells; ++j)
        expect += binomial(cells, j);
      CHECK(static_cast<double>(count) == expect);
    }
}

TEST_CASE("random cantor constructions") {
  const auto t0 = sample_random_cantor(3, 2, 0, RngStream{1, 0});
  CHECK(t0.levels == std::vector<std::vector<std::uint64_t>>{{0}});
  const auto t2 = sample_random_cantor(3, 2, 2, RngStream{1, 1});
  CHECK(t2.levels[2].size() == 4);
  for (int d = 0; d <= 5; ++d) {
    const auto t = sample_random_cantor(3, 2, d, RngStream{2, static_cast<std::uint64_t>(d)});
    const auto c = cantor_walsh_coefficients(t, 1);
    CHECK(c[0].real() == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(cantor_supercritical(3, 2));
  CHECK_FALSE(cantor_supercritical(5, 2));
  CHECK_THROWS_AS(sample_random_cantor(3, 3, 2, RngStream{}), ParameterError);

  // Parseval: sum |<mu, w_n>|^2 over n < q^k equals (q/p)^k.
  const auto t = sample_random_cantor(4, 3, 5, RngStream{3, 0});
  for (int k = 0; k <= 5; ++k) {
    double s = 0.0;
    for (auto v : cantor_walsh_coefficients_at_rank(t, k))
      s += std::norm(v);
    CHECK(s == doctest::Approx(std::pow(4.0 / 3.0, k)).epsilon(1e-12));
  }
}

TEST_CASE("galton-watson overlap") {
  const auto a = sample_random_cantor(3, 2, 6, RngStream{4, 0});
  for (int k = 0; k <= 6; ++k) {
    const auto o = gw_overlap(a, a, k);
    CHECK(o.common == (std::uint64_t{1} << k));
    CHECK(o.inner == doctest::Approx(std::pow(1.5, k)).epsilon(1e-12));
  }
  for (std::uint64_t s = 1; s < 20; ++s) {
    const auto b = sample_random_cantor(3, 2, 6, RngStream{4, s});
    for (int k = 0; k <= 6; ++k) {
      const auto o = gw_overlap(a, b, k);
      const double expect = std::pow(0.75, k) * static_cast<double>(o.common);
      CHECK(std::abs(o.inner - expect) <= 1e-12 * std::max(1.0, expect));
    }
  }

  CantorTree l, r;
  l.q = r.q = 4;
  l.p = r.p = 2;
  l.depth = r.depth = 1;
  l.levels = {{0}, {0, 1}};
  r.levels = {{0}, {2, 3}};
  const auto o = gw_overlap(l, r, 1);
  CHECK(o.common == 0);
  CHECK(std::abs(o.inner) < 1e-15);

  const int pairs = 10000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const auto x = sample_random_cantor(3, 2, 1, RngStream{5, 2 * static_cast<std::uint64_t>(i)});
    const auto y = sample_random_cantor(3, 2, 1, RngStream{5, 2 * static_cast<std::uint64_t>(i) + 1});
    const double z = static_cast<double>(gw_overlap(x, y, 1).common);
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / pairs;
  const double se = std::sqrt((sum2 / pairs - mean * mean) / (pairs - 1));
  CHECK(std::abs(mean - 4.0 / 3.0) < 3.0 * se);
}

TEST_CASE("fourier-walsh change of basis") {
  const MeasureModel delta0{AtomicMeasure{{{0.0, 1.0}}}};
  for (int s : {1, 4, 7}) {
    const auto y = walsh_of(delta0, std::size_t{1} << s);
    const auto f = fourier_walsh_change_of_basis(y, BasisDirection::walsh_to_fourier, s, {0});
    CHECK(std::abs(f.values[0] - 1.0) < 1e-12);
  }

  // Atoms at rank-7 cell midpoints.
  const MeasureModel mu{AtomicMeasure{{{13.0 / 256.0, cplx(0.4, 0.1)}, {101.0 / 256.0, -0.3}, {201.0 / 256.0, cplx(0.0, 0.15)}}}};
  const auto y = walsh_of(mu, 128);
  std::vector<std::int64_t> ns;
  for (std::int64_t n = -8; n <= 8; ++n)
    ns.push_back(n);
  const auto f = fourier_walsh_change_of_basis(y, BasisDirection::walsh_to_fourier, 7, ns);
  const auto direct = transform_measure(mu, Basis::fourier(), 17);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const std::int64_t n = ns[i];
    const std::size_t pos = n > 0 ? static_cast<std::size_t>(2 * n - 1) : static_cast<std::size_t>(-2 * n);
    CHECK(std::abs(f.values[i] - direct.values[pos]) < 1e-2);
  }

  for (std::int64_t n = -8; n <= 8; ++n) {
    double s = 0.0;
    for (auto c : change_of_basis_row(2, 10, n))
      s += std::norm(c);
    CHECK(std::abs(s - 1.0) < 1e-2);
  }
  const auto row0 = change_of_basis_row(3, 3, 0);
  CHECK(std::abs(row0[0] - 1.0) < 1e-14);
  for (std::size_t k = 1; k < row0.size(); ++k)
    CHECK(std::abs(row0[k]) < 1e-14);
}
