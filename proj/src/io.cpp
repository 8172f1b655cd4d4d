#include "poislin/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace poislin {

using nlohmann::json;

nlohmann::json to_json(const PolyMv& w) {
  json terms = json::array();
  for (const auto& [key, c] : w.terms()) {
    json indices = json::array();
    for (int i = 0; i < w.dim(); ++i)
      if (key.mask & (1u << i)) indices.push_back(i + 1);
    json exps = json::array();
    for (int i = 0; i < w.dim(); ++i) exps.push_back(mono_exp(key.mono, i));
    terms.push_back({{"indices", indices}, {"exponents", exps}, {"coeff", c}});
  }
  return {{"dim", w.dim()}, {"q", w.mv_degree()}, {"trunc_order", w.trunc_order()},
          {"terms", terms}};
}

PolyMv polymv_from_json(const json& j) {
  PolyMv w(j.at("dim").get<int>(), j.at("q").get<int>(), j.at("trunc_order").get<int>());
  for (const auto& t : j.at("terms")) {
    std::uint32_t mask = 0;
    int prev = 0;
    for (const auto& idx : t.at("indices")) {
      int i = idx.get<int>();
      if (i <= prev || i > w.dim())
        throw StructuralError("polymv_from_json: indices must be strictly increasing in 1..dim");
      prev = i;
      mask |= 1u << (i - 1);
    }
    const auto& exps = t.at("exponents");
    if (static_cast<int>(exps.size()) != w.dim())
      throw StructuralError("polymv_from_json: exponents length must equal dim");
    Mono mono = 0;
    for (int i = 0; i < w.dim(); ++i) {
      int e = exps[static_cast<size_t>(i)].get<int>();
      if (e < 0) throw StructuralError("polymv_from_json: negative exponent");
      mono += Mono(e) << (8 * i);
    }
    w.add_term(mask, mono, t.at("coeff").get<double>());
  }
  return w;
}

nlohmann::json to_json(const LieAlgebraSpec& g) {
  json c = json::array();
  for (int i = 0; i < g.dim; ++i)
    for (int j = i + 1; j < g.dim; ++j)
      for (int k = 0; k < g.dim; ++k)
        if (g.structure(i, j, k) != 0.0)
          c.push_back({i + 1, j + 1, k + 1, g.structure(i, j, k)});
  json out = {{"dim", g.dim}, {"name", g.name}, {"c", c}};
  if (g.inner_product) {
    json ip = json::array();
    for (int i = 0; i < g.dim; ++i) {
      json row = json::array();
      for (int j = 0; j < g.dim; ++j) row.push_back((*g.inner_product)(i, j));
      ip.push_back(row);
    }
    out["inner_product"] = ip;
  }
  return out;
}

LieAlgebraSpec liealg_from_json(const json& j) {
  LieAlgebraSpec g;
  g.dim = j.at("dim").get<int>();
  g.name = j.value("name", "from_file");
  g.c.assign(static_cast<size_t>(g.dim) * g.dim * g.dim, 0.0);
  for (const auto& entry : j.at("c")) {
    int i = entry.at(0).get<int>() - 1;
    int jj = entry.at(1).get<int>() - 1;
    int k = entry.at(2).get<int>() - 1;
    double v = entry.at(3).get<double>();
    if (i < 0 || jj < 0 || k < 0 || i >= g.dim || jj >= g.dim || k >= g.dim)
      throw StructuralError("liealg_from_json: index out of range");
    g.structure(i, jj, k) = v;
    g.structure(jj, i, k) = -v;
  }
  if (j.contains("inner_product")) {
    Eigen::MatrixXd ip(g.dim, g.dim);
    const auto& rows = j.at("inner_product");
    for (int i = 0; i < g.dim; ++i)
      for (int k = 0; k < g.dim; ++k) ip(i, k) = rows[static_cast<size_t>(i)][static_cast<size_t>(k)].get<double>();
    g.inner_product = ip;
  }
  validate_spec(g);
  return g;
}

nlohmann::json to_json(const FoliationData& data) {
  auto mat = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  return {{"n", data.n}, {"b1", data.b1}, {"b2", data.b2}, {"b3", data.b3},
          {"var", mat(data.var)}, {"wedge", mat(data.wedge)}};
}

FoliationData foliation_from_json(const json& j) {
  FoliationData data;
  data.n = j.at("n").get<int>();
  data.b1 = j.at("b1").get<int>();
  data.b2 = j.at("b2").get<int>();
  data.b3 = j.at("b3").get<int>();
  auto mat = [](const json& rows, int r, int c) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(r, c);
    if (static_cast<int>(rows.size()) != r)
      throw StructuralError("foliation_from_json: matrix row count mismatch");
    for (int i = 0; i < r; ++i) {
      if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != c)
        throw StructuralError("foliation_from_json: matrix column count mismatch");
      for (int k = 0; k < c; ++k)
        m(i, k) = rows[static_cast<size_t>(i)][static_cast<size_t>(k)].get<double>();
    }
    return m;
  };
  data.var = mat(j.at("var"), data.b2, data.n);
  data.wedge = mat(j.at("wedge"), data.b3, data.b1 * data.n);
  validate(data);
  return data;
}

nlohmann::json to_json(const StabilityReport& rep) {
  json out = {{"c1", rep.c1},
              {"c2", rep.c2},
              {"c3", rep.c3},
              {"equivalent_H2_AS_zero", rep.equivalent_H2_AS_zero},
              {"kernel_dim", rep.kernel_dim},
              {"rank_var", rep.rank_var},
              {"rank_wedge", rep.rank_wedge}};
  if (rep.certificate) {
    json cert = json::array();
    for (Eigen::Index i = 0; i < rep.certificate->size(); ++i)
      cert.push_back((*rep.certificate)(i));
    out["certificate"] = cert;
  }
  return out;
}

nlohmann::json to_json(const Diffeo& phi) {
  json comps = json::array();
  for (const auto& c : phi.components) comps.push_back(to_json(c));
  return {{"dim", phi.dim},
          {"trunc_order", phi.trunc},
          {"class", phi.cls == DiffeoClass::identity_to_first_order ? "identity_to_first_order"
                                                                    : "linear_part_invertible"},
          {"components", comps}};
}

nlohmann::json to_json(const RunResult& res) {
  json hist = json::array();
  for (const auto& rec : res.history)
    hist.push_back({{"k", rec.k},
                    {"r_k", rec.r_k},
                    {"t_k", std::isfinite(rec.t_k) ? json(rec.t_k) : json("inf")},
                    {"norm_s", rec.norm_s},
                    {"norm_p", rec.norm_p},
                    {"lowest_degree", rec.lowest_degree},
                    {"a_k", rec.a_k},
                    {"b_k", rec.b_k},
                    {"jacobi_defect", rec.jacobi},
                    {"coeff_max", rec.coeff_max},
                    {"continuity", rec.continuity}});
  return {{"converged", res.converged},
          {"diverged", res.diverged},
          {"steps", res.steps},
          {"final_defect", res.final_defect},
          {"message", res.message},
          {"schedule",
           {{"dim", res.schedule.dim},
            {"s", res.schedule.s},
            {"alpha", res.schedule.alpha},
            {"p", res.schedule.p},
            {"R", res.schedule.R},
            {"r", res.schedule.r},
            {"eps0", res.schedule.eps0},
            {"t0", res.schedule.t0}}},
          {"psi", to_json(res.psi)},
          {"history", hist}};
}

nlohmann::json diagnostics_json(const std::vector<SliceDiagnostic>& diags) {
  json out = json::array();
  for (const auto& d : diags)
    out.push_back({{"q", d.q},
                   {"k", d.k},
                   {"dim", d.dim},
                   {"harmonic_dim", d.harmonic_dim},
                   {"min_nonzero_eigenvalue", d.min_nonzero_eig},
                   {"green_norm", d.green_norm}});
  return out;
}

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string history_csv(const std::vector<StepRecord>& history) {
  std::ostringstream os;
  os << "k,r_k,t_k,norm_s,norm_p,lowest_degree,a_k,b_k,jacobi_defect\n";
  for (const auto& rec : history)
    os << rec.k << ',' << fmt(rec.r_k) << ',' << fmt(rec.t_k) << ',' << fmt(rec.norm_s) << ','
       << fmt(rec.norm_p) << ',' << rec.lowest_degree << ',' << (rec.a_k ? 1 : 0) << ','
       << (rec.b_k ? 1 : 0) << ',' << fmt(rec.jacobi) << '\n';
  return os.str();
}

std::string tame_csv(const std::vector<TameRow>& rows) {
  std::ostringstream os;
  os << "kind,sample_id,n,r,lhs,rhs,ratio\n";
  for (const auto& row : rows) {
    if (row.skipped) continue;
    os << row.kind << ',' << row.sample_id << ',' << row.n << ',' << fmt(row.r) << ','
       << fmt(row.lhs) << ',' << fmt(row.rhs) << ',' << fmt(row.ratio) << '\n';
  }
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw StructuralError("cannot open for writing: " + path);
  f << content;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw StructuralError("cannot open for reading: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace poislin
