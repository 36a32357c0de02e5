#include <doctest.h>

#include <cmath>
#include <vector>

#include "isac/detector.hpp"
#include "isac/rng.hpp"

using namespace isac;

namespace {

// Random factored response: steering from random angles, coefficients CN(0,1).
CfSensingResponse random_response(Rng& rng, int n_a, int n_c, int n_s, int m_tx) {
  CfSensingResponse r;
  r.n_subcarriers = n_c;
  r.n_symbols = n_s;
  const ArrayConfig arr{n_a, 0.5, ArrayAxis::Y};
  r.rx_steering = steering_vector(arr, rng.uniform_range(-kPi, kPi),
                                  rng.uniform_range(-kPi / 2, kPi / 2));
  r.coeffs = CMatrix(static_cast<std::size_t>(n_c * n_s), static_cast<std::size_t>(m_tx));
  for (auto& v : r.coeffs.data()) v = rng.cnormal();
  return r;
}

CVec random_vec(Rng& rng, std::size_t n) {
  CVec y(n);
  for (auto& v : y) v = rng.cnormal();
  return y;
}

// Physical fixture: a small distributed scenario with real grids.
struct Scenario {
  std::vector<Position3D> tx_pos;
  ArrayConfig tx_arr{2, 0.5, ArrayAxis::Y};
  ArrayConfig rx_arr{2, 0.5, ArrayAxis::Y};
  Position3D rx_pos{900, 100, 10};
  TargetState target;
  std::vector<TransmitGrid> grids;
  OfdmNumerology num{3, 2, 30e3, 2.34e-6};
  double wavelength = 0.1;
};

Scenario make_scenario(Rng& rng, int n_tx, double power = 1.0) {
  Scenario sc;
  sc.target.position = {500, 500, 60};
  sc.target.velocity = {7, -7, 0};
  sc.target.rcs_variance_m2 = 10.0;
  for (int m = 0; m < n_tx; ++m)
    sc.tx_pos.push_back({rng.uniform_range(0, 1000), rng.uniform_range(0, 1000), 10});
  for (int m = 0; m < n_tx; ++m) {
    NodePrecoders np;
    np.sense = build_sense_precoder(sc.tx_arr, sc.tx_pos[static_cast<std::size_t>(m)],
                                    sc.target.position, SteeringNorm::Unit);
    np.sense_power_w = power;
    sc.grids.push_back(synthesize_grid(np, sc.num, SymbolAlphabet::UniformPhase, rng));
  }
  return sc;
}

}  // namespace

TEST_CASE("response of a zero grid is zero with rank zero") {
  Rng rng(61);
  Scenario sc = make_scenario(rng, 2);
  for (auto& g : sc.grids)
    for (auto& v : g.data) v = cd{0.0, 0.0};
  const CfSensingResponse r = build_response_cf(sc.tx_pos, sc.tx_arr, sc.rx_pos,
                                                sc.rx_arr, sc.target, sc.grids, sc.num,
                                                sc.wavelength);
  CHECK(frobenius_norm_sq(r.coeffs) == 0.0);
  CHECK(r.rank() == 0);
  CHECK_THROWS_AS(glrt_statistic_cf({r}, {CVec(r.stacked_rows(), cd{1, 0})}), DomainError);
  CHECK_THROWS_AS(sensing_snr_cf(std::vector<CfSensingResponse>{r}, 10.0, 1e-14),
                  DomainError);
}

TEST_CASE("stacked column equals the channel applied to the grid") {
  Rng rng(62);
  Scenario sc = make_scenario(rng, 1);
  const CfSensingResponse r = build_response_cf(sc.tx_pos, sc.tx_arr, sc.rx_pos,
                                                sc.rx_arr, sc.target, sc.grids, sc.num,
                                                sc.wavelength);
  const CMatrix d = r.materialize();
  REQUIRE(d.cols() == 1);
  REQUIRE(d.rows() == 2 * 6);

  // oracle: H(n, n') s(n, n') with unit reflectivity, stacked in declared order
  TargetLink link;
  link.lsf_gain = target_lsf_bistatic(sc.tx_pos[0], sc.target.position, sc.rx_pos,
                                      sc.wavelength);
  const DelayDoppler dd = bistatic_delay_doppler(sc.tx_pos[0], sc.target.position,
                                                 sc.target.velocity, sc.rx_pos,
                                                 sc.wavelength);
  link.delay_s = dd.delay_s;
  link.doppler_hz = dd.doppler_hz;
  link.rcs_draw = {1.0, 0.0};
  link.aod = angles_between(sc.tx_pos[0], sc.target.position);
  link.aoa = angles_between(sc.rx_pos, sc.target.position);

  for (int sym = 0; sym < sc.num.n_symbols; ++sym)
    for (int sub = 0; sub < sc.num.n_subcarriers; ++sub) {
      const CMatrix h =
          target_channel_cf(link, sc.rx_arr, sc.tx_arr, sub, sym, sc.num.n_subcarriers,
                            sc.num.n_symbols, sc.num.scs_hz, sc.num.symbol_duration_s());
      const cd* s = sc.grids[0].re(sub, sym);
      for (std::size_t i = 0; i < 2; ++i) {
        cd expect{0, 0};
        for (std::size_t j = 0; j < 2; ++j) expect += h(i, j) * s[j];
        const std::size_t row =
            2 * (static_cast<std::size_t>(sub) +
                 static_cast<std::size_t>(sc.num.n_subcarriers) * static_cast<std::size_t>(sym)) +
            i;
        CHECK(std::abs(d(row, 0) - expect) < 1e-12 * std::abs(expect) + 1e-30);
      }
    }
}

TEST_CASE("column energy identity") {
  Rng rng(63);
  Scenario sc = make_scenario(rng, 3);
  const CfSensingResponse r = build_response_cf(sc.tx_pos, sc.tx_arr, sc.rx_pos,
                                                sc.rx_arr, sc.target, sc.grids, sc.num,
                                                sc.wavelength);
  const CMatrix d = r.materialize();
  for (std::size_t m = 0; m < 3; ++m) {
    const double beta = target_lsf_bistatic(sc.tx_pos[m], sc.target.position, sc.rx_pos,
                                            sc.wavelength);
    const CVec a_tx = steering_vector(
        sc.tx_arr, angles_between(sc.tx_pos[m], sc.target.position));
    double beam_energy = 0.0;
    for (int sym = 0; sym < sc.num.n_symbols; ++sym)
      for (int sub = 0; sub < sc.num.n_subcarriers; ++sub) {
        const cd* s = sc.grids[m].re(sub, sym);
        cd beam{0, 0};
        for (std::size_t j = 0; j < 2; ++j) beam += std::conj(a_tx[j]) * s[j];
        beam_energy += std::norm(beam);
      }
    double col_energy = 0.0;
    for (std::size_t row = 0; row < d.rows(); ++row) col_energy += std::norm(d(row, m));
    CHECK(col_energy ==
          doctest::Approx(beta * norm_sq(r.rx_steering) * beam_energy).epsilon(1e-10));
  }
}

TEST_CASE("simulated observations") {
  Rng rng(64);
  CfSensingResponse r = random_response(rng, 2, 2, 2, 3);

  SUBCASE("noiseless draws live in the column space") {
    CVec alpha = random_vec(rng, 3);
    const CVec y = simulate_observation_cf(r, &alpha, 0.0, rng);
    const double stat = glrt_statistic_cf({r}, {y});
    CHECK(stat == doctest::Approx(norm_sq(y)).epsilon(1e-10));
  }

  SUBCASE("h0 per-entry variance matches the noise level") {
    const double sigma2 = 0.7;
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const CVec y = simulate_observation_cf(r, nullptr, sigma2, rng);
      acc += std::norm(y[0]);
    }
    CHECK(acc / n == doctest::Approx(sigma2).epsilon(0.02));
  }

  SUBCASE("zero reflectivity under h1 reproduces the h0 law") {
    const double sigma2 = 0.5;
    CVec alpha(3, cd{0, 0});
    double acc = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
      const CVec y = simulate_observation_cf(r, &alpha, sigma2, rng);
      acc += std::norm(y[1]);
    }
    CHECK(acc / n == doctest::Approx(sigma2).epsilon(0.025));
  }
}

TEST_CASE("distributed projection statistic") {
  Rng rng(65);

  SUBCASE("observation orthogonal to the range annihilates") {
    // single-antenna response: the range is spanned by the coefficient
    // columns; build y orthogonal to all of them
    CfSensingResponse r = random_response(rng, 1, 2, 2, 2);
    const CMatrix d = r.materialize();
    CVec y = random_vec(rng, d.rows());
    const CMatrix q = mgs_orthonormal_basis(d, 1e-12);
    for (std::size_t j = 0; j < q.cols(); ++j) {
      CVec qc(d.rows());
      for (std::size_t i = 0; i < d.rows(); ++i) qc[i] = q(i, j);
      const cd proj = vdot(qc, y);
      for (std::size_t i = 0; i < d.rows(); ++i) y[i] -= proj * qc[i];
    }
    CHECK(glrt_statistic_cf({r}, {y}) < 1e-20 * norm_sq(y) + 1e-25);
  }

  SUBCASE("observation inside the range keeps its full energy") {
    CfSensingResponse r = random_response(rng, 2, 2, 2, 2);
    CVec alpha = random_vec(rng, 2);
    const CVec y = simulate_observation_cf(r, &alpha, 0.0, rng);
    CHECK(glrt_statistic_cf({r}, {y}) == doctest::Approx(norm_sq(y)).epsilon(1e-10));
  }

  SUBCASE("brute-force normal-equation oracle on a 6x2 instance") {
    CfSensingResponse r = random_response(rng, 3, 2, 1, 2);  // 6 rows, 2 cols
    const CMatrix d = r.materialize();
    const CVec y = random_vec(rng, d.rows());

    // explicit D (D^H D)^{-1} D^H y
    const CMatrix g = gram_matrix(d);
    const cd det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    CMatrix ginv(2, 2);
    ginv(0, 0) = g(1, 1) / det;
    ginv(1, 1) = g(0, 0) / det;
    ginv(0, 1) = -g(0, 1) / det;
    ginv(1, 0) = -g(1, 0) / det;
    const CVec c = adjoint_apply(d, y);
    const CVec coeff = matvec(ginv, c);
    const CVec proj = matvec(d, coeff);
    CHECK(glrt_statistic_cf({r}, {y}) ==
          doctest::Approx(norm_sq(proj)).epsilon(1e-10));
  }

  SUBCASE("statistic never exceeds the observation energy") {
    for (int rep = 0; rep < 50; ++rep) {
      CfSensingResponse r = random_response(rng, 2, 2, 2, 3);
      const CVec y = random_vec(rng, r.stacked_rows());
      const double stat = glrt_statistic_cf({r}, {y});
      CHECK(stat >= 0.0);
      CHECK(stat <= norm_sq(y) * (1.0 + 1e-12));
    }
  }

  SUBCASE("projection is idempotent") {
    for (int rep = 0; rep < 20; ++rep) {
      CfSensingResponse r = random_response(rng, 2, 2, 2, 3);
      const CVec y = random_vec(rng, r.stacked_rows());
      // project explicitly, then feed the projection back through the statistic
      const CMatrix d = r.materialize();
      const CMatrix q = mgs_orthonormal_basis(d, 1e-12);
      CVec py(y.size(), cd{0, 0});
      for (std::size_t j = 0; j < q.cols(); ++j) {
        CVec qc(d.rows());
        for (std::size_t i = 0; i < d.rows(); ++i) qc[i] = q(i, j);
        const cd proj = vdot(qc, y);
        for (std::size_t i = 0; i < d.rows(); ++i) py[i] += proj * qc[i];
      }
      const double s1 = glrt_statistic_cf({r}, {y});
      const double s2 = glrt_statistic_cf({r}, {py});
      CHECK(s2 == doctest::Approx(s1).epsilon(1e-10));
    }
  }

  SUBCASE("ml residual is orthogonal to every response column") {
    for (int rep = 0; rep < 20; ++rep) {
      CfSensingResponse r = random_response(rng, 2, 2, 2, 3);
      const CVec y = random_vec(rng, r.stacked_rows());
      const CfProjection p = project_observation_cf(r, y);
      const CMatrix d = r.materialize();
      CVec residual = y;
      const CVec fit = matvec(d, p.alpha_hat);
      for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= fit[i];
      const CVec inner = adjoint_apply(d, residual);
      for (const cd& v : inner) CHECK(std::abs(v) < 1e-9 * std::sqrt(norm_sq(y)));
    }
  }
}

TEST_CASE("gram path agrees with the explicit reference path") {
  Rng rng(66);
  for (int rep = 0; rep < 50; ++rep) {
    const int n_a = 1 + static_cast<int>(rng.uniform_int(4));
    const int n_c = 1 + static_cast<int>(rng.uniform_int(3));
    const int n_s = 1 + static_cast<int>(rng.uniform_int(2));
    const int m = 1 + static_cast<int>(rng.uniform_int(3));
    CfSensingResponse r = random_response(rng, n_a, n_c, n_s, m);
    const CVec y = random_vec(rng, r.stacked_rows());
    const double gram = glrt_statistic_cf({r}, {y});
    const double explicit_stat = glrt_statistic_cf_explicit({r}, {y});
    CHECK(gram == doctest::Approx(explicit_stat).epsilon(1e-10));
  }
}

TEST_CASE("matched-filter statistic of the co-located test") {
  Rng rng(67);
  McSensingResponse r;
  r.n_subcarriers = 2;
  r.n_symbols = 2;
  const ArrayConfig arr{3, 0.5, ArrayAxis::Y};
  r.rx_steering = steering_vector(arr, 0.4, 0.1);
  r.coeffs = random_vec(rng, 4);

  SUBCASE("matched observation returns the response energy") {
    const CVec d = r.materialize();
    CHECK(glrt_statistic_mc(r, d) ==
          doctest::Approx(r.norm_sq_stacked()).epsilon(1e-12));
  }

  SUBCASE("orthogonal observation returns zero") {
    const CVec d = r.materialize();
    CVec y = random_vec(rng, d.size());
    const cd proj = vdot(d, y) / cd{r.norm_sq_stacked(), 0.0};
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= proj * d[i];
    CHECK(glrt_statistic_mc(r, y) < 1e-18 * norm_sq(y));
  }

  SUBCASE("zero response is undefined") {
    McSensingResponse zero = r;
    for (auto& v : zero.coeffs) v = cd{0, 0};
    CHECK_THROWS_AS(glrt_statistic_mc(zero, CVec(zero.stacked_rows(), cd{1, 0})),
                    DomainError);
  }

  SUBCASE("single-column distributed response reduces to the matched filter") {
    CfSensingResponse cf;
    cf.n_subcarriers = r.n_subcarriers;
    cf.n_symbols = r.n_symbols;
    cf.rx_steering = r.rx_steering;
    cf.coeffs = CMatrix(r.coeffs.size(), 1);
    for (std::size_t b = 0; b < r.coeffs.size(); ++b) cf.coeffs(b, 0) = r.coeffs[b];
    const CVec y = random_vec(rng, r.stacked_rows());
    CHECK(glrt_statistic_cf({cf}, {y}) ==
          doctest::Approx(glrt_statistic_mc(r, y)).epsilon(1e-10));
  }
}

TEST_CASE("false-alarm threshold") {
  SUBCASE("shape one at pfa = 1/e gives the noise variance") {
    const double sigma2 = 3.7e-14;
    CHECK(threshold_from_pfa(1, sigma2, std::exp(-1.0)) ==
          doctest::Approx(sigma2).epsilon(1e-10));
  }

  SUBCASE("pfa near one sends the threshold to zero") {
    CHECK(threshold_from_pfa(1, 1.0, 1.0 - 1e-9) < 1e-8);
    CHECK(threshold_from_pfa(4, 1.0, 1.0 - 1e-9) < 1e-1);
  }

  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(threshold_from_pfa(0, 1.0, 0.1), DomainError);
    CHECK_THROWS_AS(threshold_from_pfa(1, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(threshold_from_pfa(1, 1.0, 1.0), DomainError);
  }

  SUBCASE("shape three empirical exceedance at one percent") {
    // full-path calibration oracle: rank-3 response, 1e6 H0 draws
    Rng rng(68);
    CfSensingResponse r = random_response(rng, 2, 3, 1, 3);
    REQUIRE(r.rank() == 3);
    const double sigma2 = 2.2;
    const double delta = threshold_from_pfa(3, sigma2, 0.01);
    std::size_t hits = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const CVec y = simulate_observation_cf(r, nullptr, sigma2, rng);
      if (glrt_statistic_cf({r}, {y}) > delta) ++hits;
    }
    const double rate = static_cast<double>(hits) / n;
    CHECK(rate > 0.009);
    CHECK(rate < 0.011);
  }
}

TEST_CASE("sensing snr expressions") {
  Rng rng(69);

  SUBCASE("single transmit and receive node reduces to the matched-filter snr") {
    Scenario sc = make_scenario(rng, 1);
    const CfSensingResponse cf = build_response_cf(
        sc.tx_pos, sc.tx_arr, sc.rx_pos, sc.rx_arr, sc.target, sc.grids, sc.num,
        sc.wavelength);
    McSensingResponse mc;
    mc.n_subcarriers = cf.n_subcarriers;
    mc.n_symbols = cf.n_symbols;
    mc.rx_steering = cf.rx_steering;
    mc.coeffs.resize(cf.coeffs.rows());
    for (std::size_t b = 0; b < cf.coeffs.rows(); ++b) mc.coeffs[b] = cf.coeffs(b, 0);
    const double sigma2 = 1.14e-14;
    CHECK(sensing_snr_cf(std::vector<CfSensingResponse>{cf}, 10.0, sigma2) ==
          doctest::Approx(sensing_snr_mc(mc, 10.0, sigma2)).epsilon(1e-12));
  }

  SUBCASE("snr is exactly linear in a power-of-two transmit scale") {
    Rng r1(70);
    Scenario a = make_scenario(r1, 3, 1.0);
    Rng r2(70);
    Scenario b = make_scenario(r2, 3, 4.0);
    const double sigma2 = 1e-14;
    const auto resp_a = build_response_cf(a.tx_pos, a.tx_arr, a.rx_pos, a.rx_arr,
                                          a.target, a.grids, a.num, a.wavelength);
    const auto resp_b = build_response_cf(b.tx_pos, b.tx_arr, b.rx_pos, b.rx_arr,
                                          b.target, b.grids, b.num, b.wavelength);
    const double ga = sensing_snr_cf(std::vector<CfSensingResponse>{resp_a}, 10.0, sigma2);
    const double gb = sensing_snr_cf(std::vector<CfSensingResponse>{resp_b}, 10.0, sigma2);
    CHECK(gb == 4.0 * ga);  // exact: power-of-two scaling is lossless
  }

  SUBCASE("gamma times the noise variance is invariant") {
    Scenario sc = make_scenario(rng, 2);
    const auto resp = build_response_cf(sc.tx_pos, sc.tx_arr, sc.rx_pos, sc.rx_arr,
                                        sc.target, sc.grids, sc.num, sc.wavelength);
    const std::vector<CfSensingResponse> rs{resp};
    const double g1 = sensing_snr_cf(rs, 10.0, 1e-14);
    const double g2 = sensing_snr_cf(rs, 10.0, 4e-14);
    CHECK(g1 * 1e-14 == g2 * 4e-14);
  }

  SUBCASE("zero covariance gives zero snr") {
    Scenario sc = make_scenario(rng, 2);
    const auto resp = build_response_cf(sc.tx_pos, sc.tx_arr, sc.rx_pos, sc.rx_arr,
                                        sc.target, sc.grids, sc.num, sc.wavelength);
    CHECK(sensing_snr_cf(std::vector<CfSensingResponse>{resp}, 0.0, 1e-14) == 0.0);
  }

  SUBCASE("full covariance with sigma^2 I matches the scalar overload") {
    Scenario sc = make_scenario(rng, 3);
    const auto resp = build_response_cf(sc.tx_pos, sc.tx_arr, sc.rx_pos, sc.rx_arr,
                                        sc.target, sc.grids, sc.num, sc.wavelength);
    CMatrix rcov(3, 3);
    for (std::size_t i = 0; i < 3; ++i) rcov(i, i) = cd{10.0, 0.0};
    const std::vector<CfSensingResponse> rs{resp};
    CHECK(sensing_snr_cf(rs, rcov, 1e-14) ==
          doctest::Approx(sensing_snr_cf(rs, 10.0, 1e-14)).epsilon(1e-12));
  }

  SUBCASE("zero monostatic response gives zero snr, halving noise doubles gamma") {
    McSensingResponse mc;
    mc.rx_steering = {cd{1, 0}};
    mc.coeffs = {cd{0, 0}, cd{0, 0}};
    CHECK(sensing_snr_mc(mc, 10.0, 1e-14) == 0.0);
    mc.coeffs = {cd{1, 0}, cd{0, 1}};
    CHECK(sensing_snr_mc(mc, 10.0, 2e-14) ==
          doctest::Approx(0.5 * sensing_snr_mc(mc, 10.0, 1e-14)).epsilon(1e-12));
  }
}

TEST_CASE("glrt outcomes carry the decision rule") {
  Rng rng(71);
  CfSensingResponse r = random_response(rng, 2, 2, 2, 2);
  CVec alpha = random_vec(rng, 2);
  for (auto& v : alpha) v *= 10.0;
  const double sigma2 = 0.01;
  const CVec y = simulate_observation_cf(r, &alpha, sigma2, rng);
  const GlrtOutcome out = run_glrt_cf({r}, {y}, sigma2, 0.01);
  CHECK(out.statistic >= 0.0);
  CHECK(out.target_declared == (out.statistic > out.threshold));
  CHECK(out.alpha_estimate.size() == 2);
}

TEST_CASE("detection probability of the co-located test") {
  Rng rng(72);
  McSensingResponse r;
  r.n_subcarriers = 2;
  r.n_symbols = 1;
  r.rx_steering = steering_vector(ArrayConfig{2, 0.5, ArrayAxis::Y}, 0.3, 0.0);
  r.coeffs = random_vec(rng, 2);

  SUBCASE("zero reflectivity variance degenerates to the false-alarm rate") {
    const auto est = detection_probability_mc(r, 0.0, 1.0, 0.1, 20000, rng);
    CHECK(est.ci_lo < 0.1);
    CHECK(est.ci_hi > 0.1);
  }

  SUBCASE("vanishing noise detects always") {
    const auto est = detection_probability_mc(r, 1.0, 1e-12, 0.01, 2000, rng);
    CHECK(est.probability == doctest::Approx(1.0));
  }

  SUBCASE("closed-form swerling detection curve") {
    // scalar matched filter with Rayleigh amplitude: Pd = pfa^(1/(1+gamma))
    const double sigma2 = 0.5;
    const double pfa = 0.05;
    const double gamma_bar = 2.0 * r.norm_sq_stacked() / sigma2;
    const double expected = std::pow(pfa, 1.0 / (1.0 + gamma_bar));
    const auto est = detection_probability_mc(r, 2.0, sigma2, pfa, 100000, rng);
    CHECK(est.ci_lo < expected);
    CHECK(est.ci_hi > expected);
  }
}
