#include "forktms/solver/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>

#include "forktms/parallel.hpp"
#include "forktms/simd/kernels.hpp"
#include "forktms/solver/solver.hpp"

namespace forktms::solver {

std::array<double, 64> hex_stiffness(double hx, double hy, double hz) {
  auto k1 = [](double h, int a, int b) { return (a == b ? 1.0 : -1.0) / h; };
  auto m1 = [](double h, int a, int b) { return h * (a == b ? 1.0 / 3.0 : 1.0 / 6.0); };
  std::array<double, 64> k{};
  for (int a = 0; a < 8; ++a) {
    const int ax = a & 1, ay = (a >> 1) & 1, az = a >> 2;
    for (int b = 0; b < 8; ++b) {
      const int bx = b & 1, by = (b >> 1) & 1, bz = b >> 2;
      k[a * 8 + b] = k1(hx, ax, bx) * m1(hy, ay, by) * m1(hz, az, bz) +
                     m1(hx, ax, bx) * k1(hy, ay, by) * m1(hz, az, bz) +
                     m1(hx, ax, bx) * m1(hy, ay, by) * k1(hz, az, bz);
    }
  }
  return k;
}

std::array<Vec3, 8> hex_gradient_integrals(double hx, double hy, double hz) {
  std::array<Vec3, 8> g;
  for (int a = 0; a < 8; ++a) {
    const double sx = (a & 1) ? 1.0 : -1.0;
    const double sy = ((a >> 1) & 1) ? 1.0 : -1.0;
    const double sz = (a >> 2) ? 1.0 : -1.0;
    g[a] = {sx * hy * hz / 4.0, sy * hx * hz / 4.0, sz * hx * hy / 4.0};
  }
  return g;
}

namespace {

std::array<std::size_t, 8> corner_offsets(int nx, int ny) {
  const std::size_t oy = static_cast<std::size_t>(nx + 1);
  const std::size_t oz = oy * static_cast<std::size_t>(ny + 1);
  std::array<std::size_t, 8> o{};
  for (int a = 0; a < 8; ++a) o[a] = (a & 1) + ((a >> 1) & 1) * oy + (a >> 2) * oz;
  return o;
}

}  // namespace

FemOperator::FemOperator(const ConductivityVolume& sigma)
    : sigma_(sigma), nx_(sigma.dims().nx), ny_(sigma.dims().ny), nz_(sigma.dims().nz) {
  nodes_ = static_cast<std::size_t>(nx_ + 1) * (ny_ + 1) * (nz_ + 1);
  const auto& sp = sigma.spacing();
  kref_ = hex_stiffness(sp.sx * 1e-3, sp.sy * 1e-3, sp.sz * 1e-3);
  diag_.assign(nodes_, 0.0);
  active_.assign(nodes_, 0);
  node_component_.assign(nodes_, -1);

  const auto offs = corner_offsets(nx_, ny_);
  const auto& s = sigma.data();
  for (int k = 0; k < nz_; ++k)
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i) {
        const double se = s[sigma.index(i, j, k)];
        if (se < 0.0 || !std::isfinite(se)) throw Error("invalid conductivity: must be finite and >= 0");
        if (se == 0.0) continue;
        const std::size_t base = node_index(i, j, k);
        for (int a = 0; a < 8; ++a) {
          diag_[base + offs[a]] += se * kref_[a * 9];
          active_[base + offs[a]] = 1;
        }
      }

  // Elements sharing any node are connected: 26-neighbourhood flood fill.
  std::vector<int> elem(sigma.size(), -1);
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < s.size(); ++start) {
    if (s[start] == 0.0 || elem[start] >= 0) continue;
    const int id = components_++;
    elem[start] = id;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t e = queue.front();
      queue.pop_front();
      const int i = static_cast<int>(e % nx_);
      const int j = static_cast<int>((e / nx_) % ny_);
      const int k = static_cast<int>(e / (static_cast<std::size_t>(nx_) * ny_));
      const std::size_t base = node_index(i, j, k);
      for (int a = 0; a < 8; ++a) node_component_[base + offs[a]] = id;
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (!sigma.contains(i + dx, j + dy, k + dz)) continue;
            const std::size_t n = sigma.index(i + dx, j + dy, k + dz);
            if (s[n] == 0.0 || elem[n] >= 0) continue;
            elem[n] = id;
            queue.push_back(n);
          }
    }
  }
}

void FemOperator::apply(const std::vector<double>& x, std::vector<double>& y) const {
  if (x.size() != nodes_) throw Error("size mismatch: operator input");
  y.assign(nodes_, 0.0);
  simd::HexRow row;
  row.elements = static_cast<std::size_t>(nx_);
  row.off_y = static_cast<std::size_t>(nx_ + 1);
  row.off_z = row.off_y * static_cast<std::size_t>(ny_ + 1);
  const double* s = sigma_.data().data();
  // Element plane k writes node planes k and k+1; planes of equal parity
  // never collide, so each pass runs in parallel with a fixed summation order.
  for (int parity = 0; parity < 2; ++parity) {
    const int planes = (nz_ - parity + 1) / 2;
    parallel_for(0, planes, [&](int lo, int hi) {
      for (int p = lo; p < hi; ++p) {
        const int k = 2 * p + parity;
        for (int j = 0; j < ny_; ++j) {
          const std::size_t base = node_index(0, j, k);
          simd::hex_row_apply(row, kref_.data(), s + sigma_.index(0, j, k), x.data() + base, y.data() + base);
        }
      }
    });
  }
}

std::vector<double> FemOperator::rhs(const coil::VectorField& a0) const {
  if (a0.dims != sigma_.dims()) throw Error("dims mismatch: vector potential vs conductivity");
  const auto& sp = sigma_.spacing();
  const auto g = hex_gradient_integrals(sp.sx * 1e-3, sp.sy * 1e-3, sp.sz * 1e-3);
  const auto offs = corner_offsets(nx_, ny_);
  std::vector<double> f(nodes_, 0.0);
  const auto& s = sigma_.data();
  for (int k = 0; k < nz_; ++k)
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i) {
        const std::size_t e = sigma_.index(i, j, k);
        if (s[e] == 0.0) continue;
        const Vec3 sa = s[e] * a0.at(e);
        const std::size_t base = node_index(i, j, k);
        for (int a = 0; a < 8; ++a) f[base + offs[a]] += dot(sa, g[a]);
      }
  return f;
}

void FemOperator::project_out_constants(std::vector<double>& v) const {
  if (components_ == 0) return;
  std::vector<double> sum(components_, 0.0);
  std::vector<std::size_t> count(components_, 0);
  for (std::size_t n = 0; n < nodes_; ++n) {
    const int c = node_component_[n];
    if (c < 0) {
      v[n] = 0.0;
      continue;
    }
    sum[c] += v[n];
    ++count[c];
  }
  for (int c = 0; c < components_; ++c) sum[c] /= static_cast<double>(count[c]);
  for (std::size_t n = 0; n < nodes_; ++n)
    if (node_component_[n] >= 0) v[n] -= sum[node_component_[n]];
}

std::vector<double> FemOperator::dense() const {
  if (nodes_ > 4096) throw Error("dense assembly only for small grids");
  std::vector<double> k(nodes_ * nodes_, 0.0), e(nodes_, 0.0), col;
  for (std::size_t b = 0; b < nodes_; ++b) {
    e[b] = 1.0;
    apply(e, col);
    e[b] = 0.0;
    for (std::size_t a = 0; a < nodes_; ++a) k[a * nodes_ + b] = col[a];
  }
  return k;
}

std::string SolveLog::text() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "iterations %ld\nrestarts %d\ncomponents %d\nrelative_residual %.6e\n",
                iterations, restarts, components, relative_residual);
  out += line;
  for (std::size_t i = 0; i < residual_trace.size(); ++i) {
    std::snprintf(line, sizeof line, "trace %zu %.6e\n", i, residual_trace[i]);
    out += line;
  }
  return out;
}

namespace {

double norm2(const std::vector<double>& v) { return std::sqrt(simd::dot(v.data(), v.data(), v.size())); }

}  // namespace

PotentialField solve_potential(const ConductivityVolume& sigma, const coil::VectorField& a0, double omega,
                               const SolverOptions& options) {
  if (!(omega > 0.0)) throw Error("invalid frequency: omega must be > 0");
  if (!(options.tol > 0.0)) throw Error("invalid tolerance");
  FemOperator op(sigma);
  if (op.component_count() == 0) throw Error("all-air: no conducting voxels");

  const std::size_t n = op.node_count();
  PotentialField out;
  out.voxel_dims = sigma.dims();
  out.spacing = sigma.spacing();
  out.active = op.active();
  out.psi.assign(n, 0.0);
  out.log.components = op.component_count();

  std::vector<double> f = op.rhs(a0);
  op.project_out_constants(f);
  const double fnorm = norm2(f);
  if (fnorm == 0.0) {
    out.log.residual_trace.push_back(0.0);
    return out;
  }

  const auto& active = op.active();
  std::vector<double> inv_diag(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (active[i]) inv_diag[i] = 1.0 / op.diagonal()[i];

  long max_iter = options.max_iter;
  if (max_iter < 0) max_iter = static_cast<long>(1000.0 * std::cbrt(static_cast<double>(n)));

  std::vector<double> x(n, 0.0), r(n), z(n), p(n), q(n), ys(n), s(n), d(n);
  auto& trace = out.log.residual_trace;
  long it = 0;
  constexpr int kMaxRestarts = 8;
  auto fail = [&](double res) {
    out.log.iterations = it;
    char msg[128];
    std::snprintf(msg, sizeof msg, "non-convergence: relative residual %.3e after %ld iterations", res, it);
    throw Error(msg);
  };

  for (int attempt = 0;; ++attempt) {
    op.apply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = f[i] - q[i];
    double snorm = norm2(r) / fnorm;
    if (attempt == 0) trace.push_back(snorm);
    if (snorm <= options.tol) break;
    if (attempt > kMaxRestarts) fail(snorm);
    if (attempt > 0) ++out.log.restarts;
    s = r;
    ys = x;

    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = simd::dot(r.data(), z.data(), n);
    bool converged = false;
    while (it < max_iter) {
      op.apply(p, q);
      const double pq = simd::dot(p.data(), q.data(), n);
      if (!(pq > 0.0)) break;
      const double alpha = rz / pq;
      simd::axpy(alpha, p.data(), x.data(), n);
      simd::axpy(-alpha, q.data(), r.data(), n);
      ++it;

      // Minimal-residual smoothing keeps ||s|| non-increasing.
      for (std::size_t i = 0; i < n; ++i) d[i] = r[i] - s[i];
      const double dd = simd::dot(d.data(), d.data(), n);
      if (dd > 0.0) {
        const double eta = -simd::dot(s.data(), d.data(), n) / dd;
        simd::axpy(eta, d.data(), s.data(), n);
        for (std::size_t i = 0; i < n; ++i) ys[i] += eta * (x[i] - ys[i]);
      }
      snorm = norm2(s) / fnorm;
      trace.push_back(snorm);
      if (snorm <= options.tol) {
        converged = true;
        break;
      }

      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_next = simd::dot(r.data(), z.data(), n);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    if (!converged && it >= max_iter) fail(snorm);
    // The recurrences drift from the true residual, so the next pass
    // recomputes it from the smoothed iterate and restarts if needed.
    x = ys;
  }

  op.project_out_constants(x);
  out.psi = std::move(x);
  op.apply(out.psi, q);
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) res += (f[i] - q[i]) * (f[i] - q[i]);
  out.log.relative_residual = std::sqrt(res) / fnorm;
  out.log.iterations = it;
  return out;
}

}  // namespace forktms::solver
