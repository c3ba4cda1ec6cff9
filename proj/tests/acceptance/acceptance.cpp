// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 only if all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "parisian/parisian.hpp"

using namespace parisian;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;  // <= 0: no runtime clause
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

MCConfig mc(std::size_t n, double step, std::uint64_t seed, bool is, std::size_t workers = 0) {
  MCConfig c;
  c.n_paths = n;
  c.grid_step = step;
  c.seed = seed;
  c.importance_sampling = is;
  c.workers = workers;
  return c;
}

RuinProblem bm(double c, double S, double u, double T, double ruin_from = 0.0) {
  RuinProblem p;
  p.c = c;
  p.S = S;
  p.u = u;
  p.window = Window::constant(T);
  p.ruin_from = ruin_from;
  return p;
}

bool same(double a, double b) { return a == b || std::abs(a - b) <= 1e-12 * std::abs(b); }

// ---------------------------------------------------------------------------

Outcome ac1() {
  std::string d;
  double prev = 0;
  int dir = 0;
  bool monotone = true;
  for (int u = 3; u <= 8; ++u) {
    const double r = bm_inf_tail_asymptotic(1, 1, 2, u).value / bm_inf_tail_exact(1, 1, 2, u);
    if (u > 3) {
      const int s = r > prev ? 1 : r < prev ? -1 : 0;
      if (s == 0 || (dir != 0 && s != dir)) monotone = false;
      dir = s;
    }
    d += fmt("r(%d)=%.4f ", u, r);
    prev = r;
  }
  d += fmt("| monotone=%d |r(8)-1|=%.4f <= 0.15", monotone, std::abs(prev - 1));
  return {monotone && std::abs(prev - 1) <= 0.15, d};
}

MCEstimate ac2_run(std::size_t n, std::size_t workers) {
  return estimate_parisian(bm(1, 1, 3, 1, 1), mc(n, 1.0 / 512, 2002, true, workers));
}

Outcome ac2() {
  const double exact = bm_inf_tail_exact(1, 1, 2, 3);
  const auto e = ac2_run(1000000, 0);
  const double tol = 3 * e.stderr + e.halving->bias_bound;
  return {std::abs(e.p_hat - exact) <= tol,
          fmt("p_hat=%.6e se=%.2e exact=%.6e |diff|=%.2e <= 3se+bias_bound=%.2e (shift=%.2e)", e.p_hat, e.stderr,
              exact, std::abs(e.p_hat - exact), tol, e.halving->shift)};
}

FunctionalSpec pickands_spec(double alpha) {
  FunctionalSpec s;
  s.alpha = alpha;
  s.grid_step = 0.01;
  return s;
}

ConstantEstimate ac3_run(double alpha, std::size_t n, std::size_t workers) {
  return estimate_constant_ladder(pickands_spec(alpha), kDefaultLambdas, n, alpha == 1 ? 3001 : 3002,
                                  ParallelOptions{workers, 256});
}

Outcome ac3() {
  const auto h1 = ac3_run(1, 100000, 0);
  const auto h2 = ac3_run(2, 100000, 0);
  const bool ok = h1.value >= 0.9 && h1.value <= 1.1 && h2.value >= 0.51 && h2.value <= 0.62;
  return {ok, fmt("H1=%.4f (se %.4f) in [0.9,1.1]; H2=%.4f (se %.4f) in [0.51,0.62], 1/sqrt(pi)=%.4f", h1.value,
                  h1.stderr, h2.value, h2.stderr, 1 / std::sqrt(std::numbers::pi))};
}

Outcome ac4() {
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> U(0, 1);
  double worst = 0;
  int counts[3] = {0, 0, 0};
  for (int regime = 0; regime < 3; ++regime)
    for (int i = 0; i < 100; ++i) {
      const double alpha = regime == 0 ? 0.05 + 0.9 * U(rng) : regime == 1 ? 1.0 : 1.01 + 0.99 * U(rng);
      const double S = 0.2 + 4.8 * U(rng), c = 0.1 + 2.9 * U(rng), u = 1 + 49 * U(rng), T = 0.01 + 3 * U(rng);
      const Window w = Window::scaled(T, alpha <= 1 ? 2 / alpha : 2.5 + U(rng));
      const std::optional<double> C = alpha <= 1 ? std::optional<double>(0.1 + U(rng)) : std::nullopt;
      const auto a = gauss_exact_asymptotic(LocalExpansion::for_fbm(alpha, S), c, S, u, w, C);
      const auto b = fbm_corollary_asymptotic(alpha, c, S, u, w, C);
      worst = std::max(worst, std::abs(a.value - b.value) / std::abs(b.value));
      ++counts[regime];
    }
  return {worst <= 1e-12, fmt("%d+%d+%d points, max rel diff %.2e <= 1e-12", counts[0], counts[1], counts[2], worst)};
}

Outcome ac5() {
  double worst = 0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      const double c = std::pow(10.0, -2 + 4.0 * i / 19), y = std::pow(10.0, -2 + 4.0 * j / 19);
      const double lhs = k_constant(c, y), rhs = k_constant(c * std::sqrt(y), 1) / std::sqrt(y);
      worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
    }
  return {worst <= 1e-13, fmt("400 points, max rel diff %.2e <= 1e-13", worst)};
}

FunctionalSpec piterbarg_spec() {
  FunctionalSpec s;
  s.mode = ConstantMode::piterbarg;
  s.alpha = 1;
  s.beta = 1;
  s.b1 = 1;
  s.b2 = -1;
  s.T = 0.5;
  s.grid_step = 1.0 / 128;
  return s;
}

ConstantEstimate ac6_constant(std::size_t n, std::size_t workers) {
  return estimate_constant_ladder(piterbarg_spec(), kDefaultLambdas, n, 6006, ParallelOptions{workers, 256});
}

MCEstimate ac6_mc(std::size_t n, std::size_t workers) {
  auto p = bm(1, 1, 4, 0);
  p.window = Window::scaled(1, 2);
  return estimate_parisian(p, mc(n, 1.0 / 1024, 6007, true, workers));
}

Outcome ac6() {
  const auto C = ac6_constant(100000, 0);
  const auto e = ac6_mc(1000000, 0);
  const auto asy = fbm_corollary_asymptotic(1, 1, 1, 4, Window::scaled(1, 2), C.value);
  const double ref = asy.value;
  const double tol = std::max(3 * e.stderr, 0.2 * ref);
  return {std::abs(e.p_hat - ref) <= tol,
          fmt("P(T/2)=%.4f (se %.4f); ref=%.4e p_hat=%.4e se=%.2e ratio=%.3f; |diff|=%.2e <= %.2e", C.value, C.stderr,
              ref, e.p_hat, e.stderr, e.p_hat / ref, std::abs(e.p_hat - ref), tol)};
}

MCEstimate ac7_run(double u, std::size_t n, std::size_t workers) {
  return estimate_parisian(bm(1, 1, u, 1), mc(n, 1.0 / 512, 7007 + static_cast<int>(u), true, workers));
}

Outcome ac7() {
  bool ok = true;
  std::string d;
  for (double u : {2.0, 3.0}) {
    const auto e = ac7_run(u, 100000, 0);
    const double lb = lower_bound_thm31(GaussianModel::brownian(), 1, 1, 1, u).value;
    ok = ok && lb <= e.p_hat + 3 * e.stderr;
    d += fmt("u=%g: bound=%.4e <= p_hat+3se=%.4e; ", u, lb, e.p_hat + 3 * e.stderr);
  }
  return {ok, d};
}

MCEstimate ac8_run(double u, std::size_t n, std::size_t workers) {
  return estimate_parisian(bm(1, 1, u, 0.1), mc(n, 0.001, 8008 + static_cast<int>(u), true, workers));
}

Outcome ac8() {
  std::vector<double> x, y;
  std::string d;
  for (double u : {3.0, 4.0, 5.0}) {
    const auto e = ac8_run(u, 200000, 0);
    x.push_back(u * u);
    y.push_back(std::log(e.p_hat));
    d += fmt("log p(%g)=%.3f ", u, std::log(e.p_hat));
  }
  const double slope = ols_slope(x, y);
  const double rate = log_rate(GaussianModel::brownian(), 1);
  const double displayed = displayed_log_rate(GaussianModel::brownian(), 1);
  d += fmt("| slope=%.4f target %.2f +-15%%; displayed rate -1/sigma^2(S)=%.2f", slope, rate, displayed);
  return {std::abs(slope - rate) <= 0.15 * std::abs(rate), d};
}

std::vector<MCEstimate> ac9_run(std::size_t n, std::size_t workers) {
  const std::vector<double> us = {15, 30, 60};
  return estimate_parisian_stable_ladder({1.5, 0}, 1, 1, us, 0.1, mc(n, 1e-3, 9009, false, workers));
}

Outcome ac9() {
  const auto es = ac9_run(1000000, 0);
  double r[3];
  const double us[3] = {15, 30, 60};
  for (int i = 0; i < 3; ++i) r[i] = es[i].p_hat / levy_stable_asymptotic(1.5, 0, 1, us[i]).value;
  const bool ok = r[1] >= 0.7 && r[1] <= 1.3 && std::abs(r[2] - 1) < std::abs(r[0] - 1);
  return {ok, fmt("ratio(15)=%.3f ratio(30)=%.3f in [0.7,1.3] ratio(60)=%.3f (se %.3f) closer than u=15", r[0], r[1],
                  r[2], es[2].stderr / levy_stable_asymptotic(1.5, 0, 1, 60).value)};
}

Outcome ac10() {
  const auto spec = half_normal_difference_spec();
  const double r5 = diff_tail_asymptotic(spec, 5).value / half_normal_difference_tail(5);
  const double r7 = diff_tail_asymptotic(spec, 7).value / half_normal_difference_tail(7);
  return {std::abs(r5 - 1) <= 0.1 && std::abs(r7 - 1) < std::abs(r5 - 1),
          fmt("ratio(5)=%.4f within 10%%, ratio(7)=%.4f closer", r5, r7)};
}

const double kRuinX[] = {0.5, 2 * std::numbers::ln2, 3.0};

RuinTimeLaw ac11_run(std::size_t n, std::size_t workers) {
  auto p = bm(1, 1, 4, 0);
  p.window = Window::scaled(1, 2);
  return estimate_ruin_time_law(p, mc(n, 1.0 / 1024, 11011, true, workers), kRuinX);
}

Outcome ac11() {
  const auto law = ac11_run(100000, 0);
  bool ok = true;
  std::string d = fmt("events=%zu ess=%.0f; ", law.ruin_events, law.ess);
  for (std::size_t i = 0; i < law.x.size(); ++i) {
    const double lim = ruin_time_limit_cdf(1, 1, law.x[i]);
    const bool hit = std::abs(law.cdf[i] - lim) <= 4 * law.stderr[i];
    ok = ok && hit;
    d += fmt("x=%.3f F=%.4f lim=%.4f |d|/se=%.2f; ", law.x[i], law.cdf[i], lim,
             std::abs(law.cdf[i] - lim) / law.stderr[i]);
  }
  return {ok, d};
}

Outcome ac12() {
  // Every stochastic criterion at reduced n, 1 worker against 4 workers.
  std::vector<std::string> bad;
  auto check = [&](const char* tag, double a, double b) {
    if (!same(a, b)) bad.push_back(fmt("%s %.17g vs %.17g", tag, a, b));
  };
  check("ac2", ac2_run(20000, 1).p_hat, ac2_run(20000, 4).p_hat);
  check("ac3", ac3_run(1, 2000, 1).value, ac3_run(1, 2000, 4).value);
  check("ac6c", ac6_constant(2000, 1).value, ac6_constant(2000, 4).value);
  check("ac6", ac6_mc(20000, 1).p_hat, ac6_mc(20000, 4).p_hat);
  check("ac7", ac7_run(2, 20000, 1).p_hat, ac7_run(2, 20000, 4).p_hat);
  check("ac8", ac8_run(4, 20000, 1).p_hat, ac8_run(4, 20000, 4).p_hat);
  check("ac9", ac9_run(20000, 1)[1].p_hat, ac9_run(20000, 4)[1].p_hat);
  const auto l1 = ac11_run(20000, 1), l4 = ac11_run(20000, 4);
  for (std::size_t i = 0; i < l1.cdf.size(); ++i) check("ac11", l1.cdf[i], l4.cdf[i]);
  std::string d = bad.empty() ? "8 runs reproduce at workers 1 vs 4 (tolerance 1e-12 relative)" : "";
  for (const auto& b : bad) d += b + "; ";
  return {bad.empty(), d};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "inf-tail asymptotic convergence", 1, ac1},
      {2, "exact inf tail vs importance-sampled MC", 120, ac2},
      {3, "Pickands constants H1, H2", 600, ac3},
      {4, "fBm form equals general form", 1, ac4},
      {5, "K scaling identity", 1, ac5},
      {6, "alpha=1 Parisian asymptotic vs MC", 900, ac6},
      {7, "lower bound below MC", 120, ac7},
      {8, "log-rate slope", 600, ac8},
      {9, "stable Parisian ratio", 600, ac9},
      {10, "difference-tail example", 1, ac10},
      {11, "ruin-time limit law", 900, ac11},
      {12, "determinism across worker counts", 0, ac12},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.time_limit_s <= 0 || dt < c.time_limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s AC%d %s: %s [%.1fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), dt,
                c.time_limit_s > 0 ? fmt(" < %gs", c.time_limit_s).c_str() : "");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
