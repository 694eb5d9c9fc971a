#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

#include "json.hpp"

#include "dmedc/func_core.hpp"

namespace dmedc {

inline constexpr int kInstanceSchemaVersion = 1;

struct InstanceFile {
  int schema_version = kInstanceSchemaVersion;
  std::string kind;  // "L12LS" | "ConstrainedDCLS" | "NonconvexQP"
  std::map<std::string, std::int64_t> dims;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
  std::map<std::string, Vector> arrays;
  std::map<std::string, double> derived;
};

namespace detail {

// s distinct positions in [0, n), ascending; partial Fisher-Yates.
inline std::vector<std::size_t> sample_support(SeededRng& rng, std::size_t n,
                                               std::size_t s) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.next_u64() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(s);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline DenseMatrix gaussian_matrix(SeededRng& rng, std::size_t rows,
                                   std::size_t cols) {
  DenseMatrix M(rows, cols);
  M.data = rng_gaussian(rng, rows * cols);
  return M;
}

inline void normalize_columns(DenseMatrix& M) {
  for (std::size_t j = 0; j < M.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < M.rows; ++i) s += M(i, j) * M(i, j);
    const double nrm = std::sqrt(s);
    if (nrm == 0.0) throw BadDims("normalize_columns: zero column");
    for (std::size_t i = 0; i < M.rows; ++i) M(i, j) /= nrm;
  }
}

// Shared §6.1 recipe: column-normalized Gaussian C, s-sparse x_hat,
// d = C x_hat + 0.01 noise.
struct LsData {
  DenseMatrix C;
  Vector d;
  Vector x_hat;
};

inline LsData make_ls_data(SeededRng& root, std::size_t m, std::size_t n,
                           std::size_t s) {
  SeededRng rng_C = root.child(1);
  SeededRng rng_support = root.child(2);
  SeededRng rng_xhat = root.child(3);
  SeededRng rng_noise = root.child(4);

  LsData out;
  out.C = gaussian_matrix(rng_C, m, n);
  normalize_columns(out.C);
  out.x_hat = Vector(n, 0.0);
  const std::vector<std::size_t> supp = sample_support(rng_support, n, s);
  for (std::size_t pos : supp) out.x_hat[pos] = rng_xhat.gaussian();
  Vector noise = rng_gaussian(rng_noise, m);
  out.d = matvec(out.C, out.x_hat);
  axpy(0.01, noise, out.d);
  return out;
}

}  // namespace detail

// l1-l2 regularized least squares: f = 0.5||Cx-d||^2, h = rho||.||_1,
// g = rho||.||.
inline std::pair<DCProblem, InstanceFile> gen_l12_ls(std::size_t m,
                                                     std::size_t n,
                                                     std::size_t s, double rho,
                                                     std::uint64_t seed) {
  if (m == 0 || n == 0 || s == 0 || s > n)
    throw BadDims("gen_l12_ls: need 0 < s <= n and m > 0");
  SeededRng root(seed);
  detail::LsData data = detail::make_ls_data(root, m, n, s);

  SmoothSpec f = SmoothSpec::least_squares(data.C, data.d);
  DCProblem p(f, ConvexFunctionSpec::l1_norm(rho),
              ConvexFunctionSpec::euclidean_norm(rho), n);

  InstanceFile inst;
  inst.kind = "L12LS";
  inst.dims = {{"m", static_cast<std::int64_t>(m)},
               {"n", static_cast<std::int64_t>(n)},
               {"s", static_cast<std::int64_t>(s)}};
  inst.params = {{"rho", rho}};
  inst.seed = seed;
  inst.arrays = {{"C", data.C.data}, {"d", data.d}, {"x_hat", data.x_hat}};
  inst.derived = {{"L_f", f.lipschitz_grad}, {"m_phi", f.weak_convexity}};
  return {std::move(p), std::move(inst)};
}

struct ConstrainedDclsInstance {
  LCDCProblem problem;
  InstanceFile file;
  Vector x_bar;  // strictly feasible interior point (= x_tilde)
};

// Constrained DC least squares: f = 0.5||Cx-d||^2, h = indicator of the
// l1 ball of radius M, g = rho||.||, constraint Ax = b with b = A x_tilde.
inline ConstrainedDclsInstance gen_constrained_dcls(std::size_t m,
                                                    std::size_t n,
                                                    std::size_t s, double rho,
                                                    double M,
                                                    std::uint64_t seed) {
  if (m == 0 || n == 0 || s == 0 || s > n)
    throw BadDims("gen_constrained_dcls: need 0 < s <= n and m > 0");
  if (M <= 0.0) throw BadDims("gen_constrained_dcls: M must be positive");
  SeededRng root(seed);
  detail::LsData data = detail::make_ls_data(root, m, n, s);
  SeededRng rng_A = root.child(5);
  SeededRng rng_xt = root.child(6);

  DenseMatrix A = detail::gaussian_matrix(rng_A, m, n);
  Vector x_tilde =
      rng_uniform(rng_xt, -M / (2.0 * static_cast<double>(n)),
                  M / (2.0 * static_cast<double>(n)), n);
  Vector b = matvec(A, x_tilde);

  SmoothSpec f = SmoothSpec::least_squares(data.C, data.d);
  DCProblem dc(f, ConvexFunctionSpec::indicator_l1_ball(M),
               ConvexFunctionSpec::euclidean_norm(rho), n);

  ConstrainedDclsInstance out{LCDCProblem(std::move(dc), A, b), {}, x_tilde};
  out.file.kind = "ConstrainedDCLS";
  out.file.dims = {{"m", static_cast<std::int64_t>(m)},
                   {"n", static_cast<std::int64_t>(n)},
                   {"s", static_cast<std::int64_t>(s)}};
  out.file.params = {{"rho", rho}, {"M", M}};
  out.file.seed = seed;
  out.file.arrays = {{"A", A.data},       {"C", data.C.data},
                     {"b", b},            {"d", data.d},
                     {"x_hat", data.x_hat}, {"x_tilde", x_tilde}};
  out.file.derived = {{"L_f", f.lipschitz_grad},
                      {"m_phi", f.weak_convexity}};
  return out;
}

// Nonconvex QP over an affine subspace: f = 0.5 x'Qx + q'x, g = 0.5 x'Gx,
// h = 0, Ax = b. Q is supported on null(A) plus half the row space of A;
// G on the remaining row-space directions, so QG = 0 and f - g is bounded
// below on the feasible set.
inline std::pair<LCDCProblem, InstanceFile> gen_nonconvex_qp(
    std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m == 0 || m >= n) throw BadDims("gen_nonconvex_qp: need 0 < m < n");
  SeededRng root(seed);

  DenseMatrix A;
  SvdSummary svd;
  bool ok = false;
  for (int attempt = 0; attempt < 10; ++attempt) {
    SeededRng rng_A = root.child(10 + static_cast<std::uint64_t>(attempt));
    A = detail::gaussian_matrix(rng_A, m, n);
    svd = svd_summary(A);
    if (svd.positive_rank == m) {
      ok = true;
      break;
    }
  }
  if (!ok) throw RankDeficient("gen_nonconvex_qp: rank(A) < m after 10 tries");

  SeededRng rng_q = root.child(2);
  SeededRng rng_xhat = root.child(3);
  SeededRng rng_a = root.child(4);
  SeededRng rng_b = root.child(5);

  Vector q = rng_gaussian(rng_q, n);
  Vector x_hat = rng_gaussian(rng_xhat, n);
  Vector b = matvec(A, x_hat);

  const std::size_t half = m / 2;
  const std::size_t null_dim = n - m;
  // a(v) in [1e-3, 10] keeps strict curvature on the nullspace.
  Vector a_coef = rng_uniform(rng_a, 1e-3, 10.0, null_dim + half);
  Vector b_coef = rng_uniform(rng_b, 0.0, 50.0, m - half);

  DenseMatrix Q(n, n), G(n, n);
  auto add_outer = [n](DenseMatrix& M, const DenseMatrix& basis,
                       std::size_t col, double w) {
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = w * basis(i, col);
      if (wi == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) M(i, j) += wi * basis(j, col);
    }
  };
  for (std::size_t j = 0; j < null_dim; ++j)
    add_outer(Q, svd.right_null_basis, j, a_coef[j]);
  for (std::size_t j = 0; j < half; ++j)
    add_outer(Q, svd.right_vectors, j, a_coef[null_dim + j]);
  for (std::size_t j = half; j < m; ++j)
    add_outer(G, svd.right_vectors, j, b_coef[j - half]);

  SmoothSpec f = SmoothSpec::quadratic(Q, q);
  DCProblem dc(f, ConvexFunctionSpec::zero(),
               ConvexFunctionSpec::convex_quadratic(G), n);
  LCDCProblem problem(std::move(dc), A, b);

  DenseMatrix QmG = Q;
  for (std::size_t i = 0; i < QmG.data.size(); ++i) QmG.data[i] -= G.data[i];
  const Vector spectrum = symmetric_eigenvalues(QmG);

  InstanceFile inst;
  inst.kind = "NonconvexQP";
  inst.dims = {{"m", static_cast<std::int64_t>(m)},
               {"n", static_cast<std::int64_t>(n)}};
  inst.seed = seed;
  inst.arrays = {{"A", A.data}, {"G", G.data},     {"Q", Q.data},
                 {"b", b},      {"q", q},          {"x_hat", x_hat}};
  inst.derived = {{"L_f", f.lipschitz_grad},
                  {"m_phi", f.weak_convexity},
                  {"spectrum_max", spectrum.back()},
                  {"spectrum_min", spectrum.front()}};
  return {std::move(problem), std::move(inst)};
}

// Rebuild solver-ready problems from a stored instance (no regeneration).
struct BuiltInstance {
  std::string kind;
  DCProblem dc;       // set for L12LS
  LCDCProblem lcdc;   // set for constrained kinds
  Vector x_bar;       // interior point, ConstrainedDCLS only
};

inline BuiltInstance build_problem(const InstanceFile& inst) {
  auto dim = [&](const char* name) -> std::size_t {
    auto it = inst.dims.find(name);
    if (it == inst.dims.end() || it->second <= 0)
      throw SchemaMismatch(std::string("build_problem: missing dim ") + name);
    return static_cast<std::size_t>(it->second);
  };
  auto arr = [&](const char* name) -> const Vector& {
    auto it = inst.arrays.find(name);
    if (it == inst.arrays.end())
      throw SchemaMismatch(std::string("build_problem: missing array ") + name);
    return it->second;
  };
  auto mat = [&](const char* name, std::size_t r, std::size_t c) {
    const Vector& v = arr(name);
    if (v.size() != r * c)
      throw SchemaMismatch(std::string("build_problem: bad shape for ") + name);
    DenseMatrix M(r, c);
    M.data = v;
    return M;
  };
  auto param = [&](const char* name) {
    auto it = inst.params.find(name);
    if (it == inst.params.end())
      throw SchemaMismatch(std::string("build_problem: missing param ") + name);
    return it->second;
  };

  BuiltInstance out;
  out.kind = inst.kind;
  if (inst.kind == "L12LS") {
    const std::size_t m = dim("m"), n = dim("n");
    SmoothSpec f = SmoothSpec::least_squares(mat("C", m, n), arr("d"));
    const double rho = param("rho");
    out.dc = DCProblem(std::move(f), ConvexFunctionSpec::l1_norm(rho),
                       ConvexFunctionSpec::euclidean_norm(rho), n);
  } else if (inst.kind == "ConstrainedDCLS") {
    const std::size_t m = dim("m"), n = dim("n");
    SmoothSpec f = SmoothSpec::least_squares(mat("C", m, n), arr("d"));
    const double rho = param("rho"), M = param("M");
    DCProblem dc(std::move(f), ConvexFunctionSpec::indicator_l1_ball(M),
                 ConvexFunctionSpec::euclidean_norm(rho), n);
    out.lcdc = LCDCProblem(std::move(dc), mat("A", m, n), arr("b"));
    out.x_bar = arr("x_tilde");
  } else if (inst.kind == "NonconvexQP") {
    const std::size_t m = dim("m"), n = dim("n");
    SmoothSpec f = SmoothSpec::quadratic(mat("Q", n, n), arr("q"));
    DCProblem dc(std::move(f), ConvexFunctionSpec::zero(),
                 ConvexFunctionSpec::convex_quadratic(mat("G", n, n)), n);
    out.lcdc = LCDCProblem(std::move(dc), mat("A", m, n), arr("b"));
  } else {
    throw SchemaMismatch("build_problem: unknown kind " + inst.kind);
  }
  return out;
}

inline nlohmann::ordered_json instance_to_json(const InstanceFile& inst) {
  nlohmann::ordered_json j;
  j["schema_version"] = inst.schema_version;
  j["kind"] = inst.kind;
  j["dims"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : inst.dims) j["dims"][k] = v;
  j["params"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : inst.params) j["params"][k] = v;
  j["seed"] = inst.seed;
  j["arrays"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : inst.arrays) j["arrays"][k] = v;
  j["derived"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : inst.derived) j["derived"][k] = v;
  return j;
}

inline InstanceFile instance_from_json(const nlohmann::ordered_json& j) {
  InstanceFile inst;
  try {
    inst.schema_version = j.at("schema_version").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaMismatch("instance file: missing schema_version");
  }
  if (inst.schema_version != kInstanceSchemaVersion)
    throw SchemaMismatch("instance file: unsupported schema_version " +
                         std::to_string(inst.schema_version));
  try {
    inst.kind = j.at("kind").get<std::string>();
    for (const auto& [k, v] : j.at("dims").items())
      inst.dims[k] = v.get<std::int64_t>();
    for (const auto& [k, v] : j.at("params").items())
      inst.params[k] = v.get<double>();
    inst.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("arrays").items())
      inst.arrays[k] = v.get<Vector>();
    for (const auto& [k, v] : j.at("derived").items())
      inst.derived[k] = v.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch(std::string("instance file: malformed field: ") +
                         e.what());
  }
  return inst;
}

inline void save_instance(const std::string& path, const InstanceFile& inst) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_instance: cannot open " + path);
  out << instance_to_json(inst).dump(2) << "\n";
  if (!out) throw IoError("save_instance: write failed for " + path);
}

inline InstanceFile load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_instance: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("load_instance: parse failed: ") + e.what());
  }
  return instance_from_json(j);
}

}  // namespace dmedc
