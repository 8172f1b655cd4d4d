#include "poislin/norms.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <unordered_map>

namespace poislin {

namespace {

double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
  }
  return r;
}

// Deterministic sample of the closed ball of radius r: the origin, the axis
// boundary points, Halton points of the cube kept when inside the ball, and
// the radial boundary projection of every kept point.
std::vector<std::vector<double>> sample_ball(int dim, double r, const NormConfig& cfg) {
  static const int primes[8] = {2, 3, 5, 7, 11, 13, 17, 19};
  std::vector<std::vector<double>> pts;
  if (cfg.grid_per_axis > 0) {
    int g = cfg.grid_per_axis;
    std::vector<int> idx(static_cast<size_t>(dim), 0);
    while (true) {
      std::vector<double> p(static_cast<size_t>(dim));
      double norm2 = 0;
      for (int i = 0; i < dim; ++i) {
        p[static_cast<size_t>(i)] = -r + 2.0 * r * idx[static_cast<size_t>(i)] / (g - 1);
        norm2 += p[static_cast<size_t>(i)] * p[static_cast<size_t>(i)];
      }
      if (norm2 <= r * r) pts.push_back(p);
      int d = 0;
      while (d < dim) {
        if (++idx[static_cast<size_t>(d)] < g) break;
        idx[static_cast<size_t>(d)] = 0;
        ++d;
      }
      if (d == dim) break;
    }
    if (pts.empty()) throw StructuralError("tube_norm: empty sample set");
    return pts;
  }
  if (cfg.lowdisc_count <= 0) throw StructuralError("tube_norm: empty sample set");
  pts.push_back(std::vector<double>(static_cast<size_t>(dim), 0.0));
  for (int i = 0; i < dim; ++i) {
    std::vector<double> p(static_cast<size_t>(dim), 0.0);
    p[static_cast<size_t>(i)] = r;
    pts.push_back(p);
    p[static_cast<size_t>(i)] = -r;
    pts.push_back(p);
  }
  std::uint64_t index = 1;
  int kept = 0;
  while (kept < cfg.lowdisc_count) {
    std::vector<double> p(static_cast<size_t>(dim));
    double norm2 = 0;
    for (int i = 0; i < dim; ++i) {
      p[static_cast<size_t>(i)] = 2.0 * halton(index, primes[i]) - 1.0;
      norm2 += p[static_cast<size_t>(i)] * p[static_cast<size_t>(i)];
    }
    ++index;
    if (norm2 > 1.0 || norm2 == 0.0) continue;
    std::vector<double> boundary(static_cast<size_t>(dim));
    double scale = 1.0 / std::sqrt(norm2);
    for (int i = 0; i < dim; ++i) {
      boundary[static_cast<size_t>(i)] = r * p[static_cast<size_t>(i)] * scale;
      p[static_cast<size_t>(i)] *= r;
    }
    pts.push_back(std::move(p));
    pts.push_back(std::move(boundary));
    ++kept;
  }
  return pts;
}

int falling_factorial(int m, int a) {
  int f = 1;
  for (int i = 0; i < a; ++i) f *= (m - i);
  return f;
}

}  // namespace

double tube_norm(const PolyMv& w, int n, double r, const NormConfig& cfg) {
  if (!(r > 0 && r <= 1.0)) throw PreconditionError("tube_norm: radius must lie in (0, 1]");
  if (n < 0) throw PreconditionError("tube_norm: order must be nonnegative");
  if (w.is_zero()) {
    (void)sample_ball(w.dim(), r, cfg);  // still validates the sample config
    return 0.0;
  }
  const int dim = w.dim();
  int n_eff = std::min(n, w.max_degree());

  // Evaluation atoms: one entry per (component, derivative multi-index,
  // term) with the falling-factorial weight and the residual monomial.
  struct Atom {
    int slot;      // accumulator index for (mask, alpha)
    double weight;
    Mono residual;
  };
  std::vector<Atom> atoms;
  std::map<std::pair<std::uint32_t, Mono>, int> slot_of;
  int max_exp = 0;

  for (const auto& [key, c] : w.terms()) {
    // enumerate alpha <= mono componentwise with |alpha| <= n_eff
    std::vector<Mono> alphas{0};
    for (int i = 0; i < dim; ++i) {
      int e = mono_exp(key.mono, i);
      max_exp = std::max(max_exp, e);
      if (e == 0) continue;
      std::vector<Mono> next;
      next.reserve(alphas.size() * static_cast<size_t>(e + 1));
      for (Mono a : alphas)
        for (int ai = 0; ai <= e; ++ai) next.push_back(a + (Mono(ai) << (8 * i)));
      alphas = std::move(next);
    }
    for (Mono a : alphas) {
      if (mono_degree(a) > n_eff) continue;
      double weight = c;
      Mono residual = 0;
      for (int i = 0; i < dim; ++i) {
        int m = mono_exp(key.mono, i), ai = mono_exp(a, i);
        weight *= falling_factorial(m, ai);
        residual += Mono(m - ai) << (8 * i);
      }
      auto [it, inserted] = slot_of.emplace(std::make_pair(key.mask, a),
                                            static_cast<int>(slot_of.size()));
      atoms.push_back(Atom{it->second, weight, residual});
    }
  }

  std::vector<double> acc(slot_of.size());
  std::vector<double> powers(static_cast<size_t>(dim) * (static_cast<size_t>(max_exp) + 1));
  double best = 0;
  for (const auto& p : sample_ball(dim, r, cfg)) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int i = 0; i < dim; ++i) {
      powers[static_cast<size_t>(i) * (max_exp + 1)] = 1.0;
      for (int e = 1; e <= max_exp; ++e)
        powers[static_cast<size_t>(i) * (max_exp + 1) + e] =
            powers[static_cast<size_t>(i) * (max_exp + 1) + e - 1] * p[static_cast<size_t>(i)];
    }
    for (const Atom& atom : atoms) {
      double v = atom.weight;
      Mono m = atom.residual;
      int i = 0;
      while (m) {
        int e = static_cast<int>(m & 0xffu);
        if (e) v *= powers[static_cast<size_t>(i) * (max_exp + 1) + e];
        m >>= 8;
        ++i;
      }
      acc[static_cast<size_t>(atom.slot)] += v;
    }
    for (double v : acc) best = std::max(best, std::abs(v));
  }
  return best;
}

double diffeo_distance(const Diffeo& phi, int n, double r, const NormConfig& cfg) {
  double best = 0;
  for (int i = 0; i < phi.dim; ++i) {
    PolyMv delta = phi.components[static_cast<size_t>(i)] - poly_coordinate<double>(phi.dim, phi.trunc, i);
    best = std::max(best, tube_norm(delta, n, r, cfg));
  }
  return best;
}

InterpolationReport interpolation_report(const PolyMv& w, int k, int l, int n, double r,
                                         const NormConfig& cfg) {
  if (!(0 <= k && k <= l && l <= n) || k == n)
    throw PreconditionError("interpolation_report requires 0 <= k <= l <= n, not all equal");
  InterpolationReport rep;
  rep.lhs = tube_norm(w, l, r, cfg);
  double nk = tube_norm(w, k, r, cfg);
  double nn = tube_norm(w, n, r, cfg);
  if (nk == 0 || nn == 0) return rep;  // degenerate: ratio stays 0
  double e1 = static_cast<double>(n - l) / (n - k);
  double e2 = static_cast<double>(l - k) / (n - k);
  rep.rhs_without_constant = std::pow(r, k - l) * std::pow(nk, e1) * std::pow(nn, e2);
  rep.ratio = rep.rhs_without_constant > 0 ? rep.lhs / rep.rhs_without_constant : 0.0;
  return rep;
}

PolyMv random_multivector(DetRng& rng, int dim, int q, int trunc, int min_degree, int max_degree,
                          double density, double scale) {
  PolyMv w(dim, q, trunc);
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 0; m < (1u << dim); ++m)
    if (std::popcount(m) == q) masks.push_back(m);
  // enumerate monomials of each degree in range
  std::vector<Mono> monos;
  std::function<void(int, int, Mono)> rec = [&](int var, int degree_left, Mono cur) {
    if (var == dim - 1) {
      monos.push_back(cur + (Mono(degree_left) << (8 * var)));
      return;
    }
    for (int e = 0; e <= degree_left; ++e)
      rec(var + 1, degree_left - e, cur + (Mono(e) << (8 * var)));
  };
  for (int deg = min_degree; deg <= std::min(max_degree, trunc); ++deg) rec(0, deg, 0);
  for (std::uint32_t m : masks)
    for (Mono mono : monos)
      if (rng.uniform() < density) w.add_term(m, mono, scale * rng.symmetric());
  return w;
}

std::string tame_kind_name(TameKind kind) {
  switch (kind) {
    case TameKind::bracket: return "bracket";
    case TameKind::flow: return "flow";
    case TameKind::pullback1: return "pullback1";
    case TameKind::pullback2: return "pullback2";
    case TameKind::pullback3: return "pullback3";
  }
  return "?";
}

std::vector<TameRow> tame_ratio_report(TameKind kind, const TameSampleSpec& spec) {
  std::vector<TameRow> rows;
  DetRng rng(spec.seed);
  const double theta = 0.1;  // smallness margin for the flow estimates
  for (int id = 0; id < spec.count; ++id) {
    TameRow row;
    row.kind = tame_kind_name(kind);
    row.sample_id = id;
    row.n = spec.n;
    row.r = spec.r;
    const int n = spec.n;
    const double r = spec.r, s = spec.s;

    if (kind == TameKind::bracket) {
      PolyMv w = random_multivector(rng, spec.dim, 2, spec.trunc, spec.min_degree,
                                    spec.max_degree, 0.35, 1.0);
      PolyMv v = random_multivector(rng, spec.dim, 1, spec.trunc, spec.min_degree,
                                    spec.max_degree, 0.35, 1.0);
      row.lhs = tube_norm(schouten_bracket(w, v), n, r, spec.norms);
      row.rhs = std::pow(r, -(n + 1)) *
                (tube_norm(w, 0, r, spec.norms) * tube_norm(v, n + 1, r, spec.norms) +
                 tube_norm(w, n + 1, r, spec.norms) * tube_norm(v, 0, r, spec.norms));
    } else {
      // vector field vanishing to second order, scaled into the smallness
      // regime of the flow lemmas
      PolyMv x = random_multivector(rng, spec.dim, 1, spec.trunc, std::max(2, spec.min_degree),
                                    spec.max_degree, 0.35, 1.0);
      double x1 = tube_norm(x, 1, r, spec.norms);
      double x0 = tube_norm(x, 0, r, spec.norms);
      double cap = 1.0;
      if (x1 > 0) cap = std::min(cap, theta / x1);
      if (x0 > 0) cap = std::min(cap, theta * (r - s) / x0);
      x *= cap;
      if (tube_norm(x, 1, r, spec.norms) > theta + 1e-12 ||
          tube_norm(x, 0, r, spec.norms) > theta * (r - s) + 1e-12) {
        row.skipped = true;
        rows.push_back(row);
        continue;
      }
      Diffeo phi = lie_series_flow(x);
      if (kind == TameKind::flow) {
        row.lhs = diffeo_distance(phi, n, s, spec.norms);
        row.rhs = (n >= 1) ? std::pow(r, 1 - n) * tube_norm(x, n, r, spec.norms)
                           : tube_norm(x, 0, r, spec.norms);
      } else {
        PolyMv w = random_multivector(rng, spec.dim, 2, spec.trunc, spec.min_degree,
                                      spec.max_degree, 0.35, 1.0);
        PolyMv pb = pullback(phi, w);
        if (kind == TameKind::pullback1) {
          row.lhs = tube_norm(pb, n, s, spec.norms);
          row.rhs = std::pow(r, -n) *
                    (tube_norm(w, n, r, spec.norms) +
                     tube_norm(w, 0, r, spec.norms) * tube_norm(x, n + 1, r, spec.norms));
        } else if (kind == TameKind::pullback2) {
          row.lhs = tube_norm(pb - w, n, s, spec.norms);
          row.rhs = std::pow(r, -2 * n - 1) *
                    (tube_norm(x, n + 1, r, spec.norms) * tube_norm(w, 1, r, spec.norms) +
                     tube_norm(x, 1, r, spec.norms) * tube_norm(w, n + 1, r, spec.norms));
        } else {
          PolyMv rem = pb - w - pullback(phi, schouten_bracket(x, w));
          row.lhs = tube_norm(rem, n, s, spec.norms);
          row.rhs = std::pow(r, -3 * (n + 2)) * tube_norm(x, 0, r, spec.norms) *
                    (tube_norm(x, n + 2, r, spec.norms) * tube_norm(w, 2, r, spec.norms) +
                     tube_norm(x, 2, r, spec.norms) * tube_norm(w, n + 2, r, spec.norms));
        }
      }
    }
    row.ratio = row.rhs > 0 ? row.lhs / row.rhs : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace poislin
