#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "fixtures.h"
#include "heraldmux/analytic.h"
#include "heraldmux/spectral.h"
#include "heraldmux/units.h"
#include "oracles.h"

using namespace heraldmux;

namespace {

struct Ch1 {
  double eta_s = static_cast<double>(oracle::from_db(33.0L));
  double eta_i = static_cast<double>(oracle::from_db(19.0L));
  double d_i = 1.8e3 / 76e6;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Closed-form Gaussian overlap: ratio of two 2-D Gaussian integrals.
double overlap_oracle(const SpectralSpec& s) {
  const double k = 2.0 * std::sqrt(2.0 * std::log(2.0));
  const double sp = s.pump_bandwidth_ghz / k;
  const double si = s.idler_filter_bandwidth_ghz / k;
  const double sm = 299792458.0 * s.phasematch_bandwidth_nm /
                    (s.center_wavelength_ref_nm * s.center_wavelength_ref_nm) / k;
  const double a = 1 / (sp * sp) + 1 / (sm * sm);
  const double d = 1 / (si * si) + 1 / (sm * sm);
  const double b = -1 / (sm * sm);
  if (!std::isfinite(s.signal_filter_bandwidth_ghz)) return 1.0;
  const double f = 1 / std::pow(s.signal_filter_bandwidth_ghz / k, 2);
  const double det_q = a * d - b * b;
  const double det_qf = (a + f) * (d + f) - (b - f) * (b - f);
  return std::sqrt(det_q / det_qf);
}

}  // namespace

TEST_CASE("car examples") {
  CHECK(car(0.1, 1, 1, 0, 0) == doctest::Approx(10.0).epsilon(1e-15));

  const Ch1 ch;
  const double d_s = fit_dark_signal(21.0, ch.eta_s, ch.eta_i, ch.d_i);
  const auto op = optimal_operating_point(ch.eta_s, ch.eta_i, ch.d_i, d_s);
  CHECK(std::abs(car(op.c_star, ch.eta_s, ch.eta_i, ch.d_i, d_s) - 21.0) < 0.5);

  const double grid[5][5] = {{1e-8, 5e-4, 1.2e-2, 2.4e-5, 1.5e-5},
                             {3e-7, 1e-3, 1e-2, 1e-5, 1e-5},
                             {0.1, 1, 1, 0, 1e-3},
                             {2e-6, 0.3, 0.05, 1e-4, 0},
                             {5e-9, 6.3e-4, 2.5e-3, 2.6e-5, 4.8e-5}};
  for (const auto& g : grid) {
    const double expected = static_cast<double>(oracle::eq1(g[0], g[1], g[2], g[3], g[4]));
    CHECK(rel(car(g[0], g[1], g[2], g[3], g[4]), expected) < 1e-12);
  }
}

TEST_CASE("car at zero coincidences") {
  CHECK(car(0.0, 0.5, 0.5, 1e-5, 1e-5) == 0.0);
  CHECK_THROWS_AS(car(0.0, 0.5, 0.5, 0.0, 0.0), std::domain_error);
  CHECK_THROWS(car(1e-6, 0.0, 0.5, 1e-5, 1e-5));
  CHECK_THROWS(car(1e-6, 0.5, 1.5, 1e-5, 1e-5));
  CHECK_THROWS(car(1e-6, 0.5, 0.5, -1e-5, 1e-5));
}

TEST_CASE("car shape") {
  const Ch1 ch;
  const double d_s = 1.5e-5;
  // strictly decreasing in each dark probability
  for (double c : {1e-9, 1e-8, 1e-7, 1e-6}) {
    double prev_i = INFINITY;
    double prev_s = INFINITY;
    for (double d = 1e-7; d < 1e-3; d *= 1.7) {
      const double vi = car(c, ch.eta_s, ch.eta_i, d, d_s);
      const double vs = car(c, ch.eta_s, ch.eta_i, ch.d_i, d);
      CHECK(vi < prev_i);
      CHECK(vs < prev_s);
      prev_i = vi;
      prev_s = vs;
    }
  }
  // unimodal in c, vanishing at both ends
  const auto op = optimal_operating_point(ch.eta_s, ch.eta_i, ch.d_i, d_s);
  double prev = 0.0;
  bool falling = false;
  for (int k = 0; k <= 4000; ++k) {
    const double c = op.c_star * std::pow(10.0, -6.0 + 12.0 * k / 4000.0);
    const double v = car(c, ch.eta_s, ch.eta_i, ch.d_i, d_s);
    if (v < prev) falling = true;
    if (falling) {
      CHECK(v <= prev);
    }
    prev = v;
  }
  CHECK(car(op.c_star * 1e-6, ch.eta_s, ch.eta_i, ch.d_i, d_s) < 1e-4 * op.car_max);
  // at the largest physical c (one pair per pulse) the ratio has fallen below 1
  CHECK(car(ch.eta_s * ch.eta_i, ch.eta_s, ch.eta_i, ch.d_i, d_s) < 1.0);
}

TEST_CASE("optimal operating point") {
  const auto sym = optimal_operating_point(1, 1, 1e-4, 1e-4);
  CHECK(sym.c_star == doctest::Approx(1e-4).epsilon(1e-14));
  CHECK_THROWS_AS(optimal_operating_point(1, 1, 0.0, 1e-4), std::domain_error);
  CHECK_THROWS_AS(optimal_operating_point(1, 1, 1e-4, 0.0), std::domain_error);

  const Ch1 ch;
  const double d_s = fit_dark_signal(21.0, ch.eta_s, ch.eta_i, ch.d_i);
  const auto op = optimal_operating_point(ch.eta_s, ch.eta_i, ch.d_i, d_s);
  for (int k = 0; k < 10000; ++k) {
    const double c = op.c_star / 100.0 * std::pow(1e4, k / 9999.0);
    CHECK(op.car_max >= car(c, ch.eta_s, ch.eta_i, ch.d_i, d_s));
  }

  // channel 4: the fit reproduces its maximum CAR
  const auto& row = oracle::table1()[3];
  const double es = static_cast<double>(oracle::from_db(row.signal_db));
  const double ei = static_cast<double>(oracle::from_db(row.idler_db));
  const double di = row.herald_dark_hz / oracle::kRepRate;
  CHECK(std::abs(di - 1.316e-5) < 1e-8);
  const auto op4 = optimal_operating_point(es, ei, di, fit_dark_signal(25.0, es, ei, di));
  CHECK(std::abs(op4.car_max - 25.0) < 0.5);

  // closed form vs scan on random draws
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int draw = 0; draw < 100; ++draw) {
    const double es_r = std::pow(10.0, -4.0 * u(gen));
    const double ei_r = std::pow(10.0, -3.0 * u(gen));
    const double di_r = std::pow(10.0, -7.0 + 4.0 * u(gen));
    const double ds_r = std::pow(10.0, -7.0 + 4.0 * u(gen));
    const auto cf = optimal_operating_point(es_r, ei_r, di_r, ds_r);
    const double lo = cf.c_star / 100.0;
    const double hi = std::min(cf.c_star * 100.0, es_r * ei_r);
    const auto scan = oracle::scan_max(es_r, ei_r, di_r, ds_r, lo, hi, 10000);
    CHECK(cf.car_max >= scan.car * (1.0 - 1e-12));
    CHECK(cf.c_star / scan.c <= scan.step_ratio * (1 + 1e-12));
    CHECK(scan.c / cf.c_star <= scan.step_ratio * (1 + 1e-12));
  }
}

TEST_CASE("fit_dark_signal") {
  for (const auto& row : oracle::table1()) {
    const double es = static_cast<double>(oracle::from_db(row.signal_db));
    const double ei = static_cast<double>(oracle::from_db(row.idler_db));
    const double di = row.herald_dark_hz / oracle::kRepRate;
    const double ds = fit_dark_signal(row.max_car, es, ei, di);
    CHECK(ds > 0.0);
    CHECK(std::isfinite(ds));
    CHECK(rel(optimal_operating_point(es, ei, di, ds).car_max, row.max_car) < 1e-6);

    // independent fine scan over d_s with the closed-form maximum
    double best_ds = 0.0;
    double best_err = INFINITY;
    for (int k = 0; k <= 20000; ++k) {
      const double trial = std::pow(10.0, -9.0 + 6.0 * k / 20000.0);
      const double cs = std::sqrt(es * ei * di * trial);
      const double err = std::abs(static_cast<double>(oracle::eq1(cs, es, ei, di, trial)) - row.max_car);
      if (err < best_err) {
        best_err = err;
        best_ds = trial;
      }
    }
    CHECK(rel(ds, best_ds) < 1e-3);  // grid step is 6.9e-4 in log10
  }
  const double d3 = fit_dark_signal(7.0, static_cast<double>(oracle::from_db(32.0L)),
                                    static_cast<double>(oracle::from_db(26.0L)), 2.632e-5);
  CHECK(d3 > 0.0);

  const Ch1 ch;
  CHECK_THROWS_AS(fit_dark_signal(1e6, ch.eta_s, ch.eta_i, ch.d_i), std::domain_error);
  CHECK_THROWS_AS(fit_dark_signal(0.5, ch.eta_s, ch.eta_i, ch.d_i), std::domain_error);
  try {
    fit_dark_signal(1e6, ch.eta_s, ch.eta_i, ch.d_i);
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("at most") != std::string::npos);
  }
}

TEST_CASE("coincidence and rate conversions") {
  CHECK(coincidence_per_pulse(0.0, 0.5, 0.5) == 0.0);
  const double c1 = coincidence_per_pulse(0.0128, std::pow(10.0, -3.3), std::pow(10.0, -1.9));
  CHECK(std::abs(c1 - 8.08e-8) < 1e-10);
  CHECK(rate_hz(c1, 76e6) == doctest::Approx(6.14).epsilon(1e-3));
  const double c2 = coincidence_per_pulse(0.0231, std::pow(10.0, -3.35), std::pow(10.0, -2.1));
  CHECK(c2 == doctest::Approx(0.0231 * std::pow(10.0, -5.45)).epsilon(1e-14));
  CHECK(rate_hz(0.0, 76e6) == 0.0);
  CHECK(std::abs(rate_hz(3.55e-7, 76e6) - 27.0) < 0.1);
  CHECK(per_pulse_from_rate(27.0, 76e6) == doctest::Approx(27.0 / 76e6).epsilon(1e-15));
  CHECK_THROWS(rate_hz(1.5, 76e6));
}

TEST_CASE("mux prediction reduces to one channel") {
  Scenario s = with_fitted_signal_darks(fixture::channel1());
  const auto ch = analytic_channels(s).front();
  const auto p = predict(s);
  CHECK(p.car == car(ch));  // bit-for-bit
  CHECK(p.coincidence_per_pulse == ch.c);
  CHECK(p.herald_prob_per_pulse == doctest::Approx(ch.c / ch.eta_s + ch.d_i).epsilon(1e-15));
  CHECK_THROWS(mux_prediction({}, s.topology));
}

TEST_CASE("two identical channels double the rate to first order") {
  Scenario s = with_fitted_signal_darks(fixture::identical_channel1(2));
  const auto single = predict(s.subset({"c1"}));
  const auto both = predict(s);
  const auto ch = analytic_channels(s).front();
  // Enumeration over (herald 1, herald 2): channel 1 is used whenever it
  // heralds, channel 2 only when channel 1 is silent.
  const double h = ch.c / ch.eta_s + ch.d_i;
  const double enumerated = ch.c * 1.0 + (1.0 - h) * ch.c;
  CHECK(both.coincidence_per_pulse == doctest::Approx(enumerated).epsilon(1e-13));
  const double ratio = both.coincidence_per_pulse / single.coincidence_per_pulse;
  CHECK(ratio < 2.0);
  CHECK(2.0 - ratio <= 1.0001 * (ch.c / ch.eta_s + ch.d_i));
}

TEST_CASE("mux prediction invariants") {
  for (auto routing : {RoutingPolicy::priority, RoutingPolicy::random_uniform}) {
    Scenario s = with_fitted_signal_darks(fixture::table1_tree());
    s.topology.routing = routing;
    const auto p = predict(s);
    double sum = 0.0;
    for (const auto& [label, prob] : p.selection) {
      CHECK(prob >= 0.0);
      CHECK(prob <= 1.0);
      sum += prob;
    }
    CHECK(sum == doctest::Approx(p.herald_prob_per_pulse).epsilon(1e-12));
    // some channel is routed whenever any heralds
    double none = 1.0;
    for (const auto& ch : analytic_channels(s)) none *= 1.0 - (ch.c / ch.eta_s + ch.d_i);
    CHECK(p.herald_prob_per_pulse == doctest::Approx(1.0 - none).epsilon(1e-12));
  }

  // adding a channel behind lossless switches never lowers the rate and never
  // beats the sum of singles
  Scenario four = with_fitted_signal_darks(fixture::table1_tree());
  for (auto& sw : four.topology.switches) sw.second.insertion_loss_db = 0.0;
  const std::vector<std::string> order = {"1", "2", "4", "3"};
  double prev = 0.0;
  double singles = 0.0;
  for (std::size_t n = 1; n <= order.size(); ++n) {
    const std::vector<std::string> subset(order.begin(), order.begin() + n);
    const double rate = predict(four.subset(subset)).coincidence_per_pulse;
    singles += predict(four.subset({order[n - 1]})).coincidence_per_pulse;
    CHECK(rate >= prev);
    CHECK(rate <= singles * (1 + 1e-12));
    prev = rate;
  }
}

TEST_CASE("four-channel tree: fourth channel adds little rate and costs CAR") {
  const Scenario s = with_fitted_signal_darks(fixture::table1_tree());
  const auto mux4 = predict(s);
  const auto mux3 = predict(s.subset({"1", "2", "4"}));
  CHECK(std::abs(mux4.coincidence_per_pulse / mux3.coincidence_per_pulse - 1.0) < 0.10);
  CHECK(mux4.car < mux3.car);
}

TEST_CASE("uniform scaling of coincidences and darks keeps the channel ordering") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int draw = 0; draw < 200; ++draw) {
    double a[5], b[5];
    for (double* v : {a, b}) {
      v[1] = std::pow(10.0, -3.5 * u(gen));
      v[2] = std::pow(10.0, -2.5 * u(gen));
      v[0] = v[1] * v[2] * std::pow(10.0, -3.0 * u(gen));
      v[3] = std::pow(10.0, -6.0 + 2.0 * u(gen));
      v[4] = std::pow(10.0, -6.0 + 2.0 * u(gen));
    }
    const double k = std::pow(10.0, -1.0 + 2.0 * u(gen));
    const bool before = car(a[0], a[1], a[2], a[3], a[4]) > car(b[0], b[1], b[2], b[3], b[4]);
    const double ka = car(k * a[0] > a[1] * a[2] ? a[0] : k * a[0], a[1], a[2], k * a[3], k * a[4]);
    const double kb = car(k * b[0] > b[1] * b[2] ? b[0] : k * b[0], b[1], b[2], k * b[3], k * b[4]);
    if (k * a[0] <= a[1] * a[2] && k * b[0] <= b[1] * b[2]) {
      CHECK(before == (ka > kb));
    }
  }
}

TEST_CASE("spectral overlap factor") {
  SpectralSpec s;
  const double f = spectral_overlap_factor(s);
  MESSAGE("overlap factor " << f << " (estimate quoted for the setup: 0.5)");
  CHECK(f >= 0.25);
  CHECK(f <= 0.75);
  CHECK(f == doctest::Approx(overlap_oracle(s)).epsilon(1e-6));

  SpectralSpec wide = s;
  wide.signal_filter_bandwidth_ghz = 200.0;
  CHECK(spectral_overlap_factor(wide) > f);
  CHECK(spectral_overlap_factor(wide) == doctest::Approx(overlap_oracle(wide)).epsilon(1e-6));

  SpectralSpec open = s;
  open.signal_filter_bandwidth_ghz = std::numeric_limits<double>::infinity();
  CHECK(spectral_overlap_factor(open) == doctest::Approx(1.0).epsilon(1e-12));
  open.signal_filter_bandwidth_ghz = 1e9;
  CHECK(spectral_overlap_factor(open) == doctest::Approx(1.0).epsilon(1e-6));

  double prev = 0.0;
  for (int k = 0; k < 10; ++k) {
    SpectralSpec t = s;
    t.signal_filter_bandwidth_ghz = 25.0 * (k + 1);
    const double v = spectral_overlap_factor(t);
    CHECK(v >= prev);
    prev = v;
  }
  prev = 2.0;
  for (int k = 0; k < 10; ++k) {
    SpectralSpec t = s;
    t.pump_bandwidth_ghz = 50.0 * (k + 1);
    const double v = spectral_overlap_factor(t);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("temperature tuning") {
  const SpectralSpec s;
  CHECK(central_wavelength(363.0, s) == 1550.0);
  CHECK(central_wavelength(364.0, s) == 1554.0);
  CHECK(central_wavelength(355.5, s) == 1520.0);
  CHECK(central_wavelength(370.5, s) == 1580.0);
  CHECK(nm_to_ghz(30.0, 1550.0) == doctest::Approx(3743.4).epsilon(1e-4));
}
