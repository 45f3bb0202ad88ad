#include "forktms/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "forktms/parallel.hpp"
#include "forktms/solver/conductivity.hpp"
#include "forktms/solver/solver.hpp"

namespace forktms::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void require_same(const Mask& a, const Mask& b) {
  if (!a.same_grid(b)) throw Error("shape mismatch: masks on different grids");
}

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) along one line
// with sample spacing h; f and out have n entries with stride `stride`.
void edt_line(double* f, std::size_t stride, int n, double h, std::vector<int>& v, std::vector<double>& z,
              std::vector<double>& tmp) {
  v.resize(n);
  z.resize(n + 1);
  tmp.resize(n);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    const double fq = f[q * stride];
    if (fq == kInf) continue;
    const double xq = q * h;
    double s = -kInf;
    while (k >= 0) {
      const int p = v[k];
      const double xp = p * h;
      s = ((fq + xq * xq) - (f[p * stride] + xp * xp)) / (2.0 * (xq - xp));
      if (s <= z[k]) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : s;
    z[k + 1] = kInf;
  }
  if (k < 0) return;  // no finite samples: stays +inf
  int j = 0;
  for (int q = 0; q < n; ++q) {
    const double xq = q * h;
    while (z[j + 1] < xq) ++j;
    const double d = (q - v[j]) * h;
    tmp[q] = d * d + f[v[j] * stride];
  }
  for (int q = 0; q < n; ++q) f[q * stride] = tmp[q];
}

std::size_t count(const Mask& m) {
  std::size_t c = 0;
  for (auto v : m.data()) c += v != 0;
  return c;
}

}  // namespace

Mask label_mask(const volume::LabelVolume& labels, int id) {
  Mask m(labels.dims(), labels.spacing(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) m.data()[i] = labels.data()[i] == id;
  return m;
}

double dice(const Mask& a, const Mask& b) {
  require_same(a, b);
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.data()[i] != 0, y = b.data()[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) throw Error("empty masks: Dice undefined when both are empty");
  return 200.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::vector<double> squared_distance_transform(const Mask& mask) {
  const auto d = mask.dims();
  const auto sp = mask.spacing();
  std::vector<double> f(mask.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = mask.data()[i] ? 0.0 : kInf;
  const std::size_t sy = static_cast<std::size_t>(d.nx), sz = sy * d.ny;
  parallel_for(0, d.nz, [&](int lo, int hi) {
    std::vector<int> v;
    std::vector<double> z, tmp;
    for (int k = lo; k < hi; ++k) {
      for (int j = 0; j < d.ny; ++j) edt_line(&f[j * sy + k * sz], 1, d.nx, sp.sx, v, z, tmp);
      for (int i = 0; i < d.nx; ++i) edt_line(&f[i + k * sz], sy, d.ny, sp.sy, v, z, tmp);
    }
  });
  parallel_for(0, d.ny, [&](int lo, int hi) {
    std::vector<int> v;
    std::vector<double> z, tmp;
    for (int j = lo; j < hi; ++j)
      for (int i = 0; i < d.nx; ++i) edt_line(&f[i + j * sy], sz, d.nz, sp.sz, v, z, tmp);
  });
  return f;
}

double hausdorff_directed(const Mask& a, const Mask& b) {
  require_same(a, b);
  if (count(a) == 0 || count(b) == 0) throw Error("empty mask: Hausdorff distance undefined");
  const auto dt = squared_distance_transform(b);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.data()[i]) worst = std::max(worst, dt[i]);
  return std::sqrt(worst);
}

double hausdorff_symmetric(const Mask& a, const Mask& b) {
  return std::max(hausdorff_directed(a, b), hausdorff_directed(b, a));
}

double mae(const volume::ScalarVolume& ref, const volume::ScalarVolume& test, const Mask& region, bool raw,
           const Mask* norm_roi) {
  if (!ref.same_grid(test) || !ref.same_grid(region)) throw Error("shape mismatch: fields and region");
  const Mask& roi = norm_roi ? *norm_roi : region;
  if (!ref.same_grid(roi)) throw Error("shape mismatch: normalization ROI");
  std::size_t n = count(region);
  if (n == 0) throw Error("empty region: MAE undefined");
  double sr = 1.0, st = 1.0;
  if (!raw) {
    double mr = 0.0, mt = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < roi.size(); ++i)
      if (roi.data()[i]) {
        any = true;
        mr = std::max(mr, double(ref.data()[i]));
        mt = std::max(mt, double(test.data()[i]));
      }
    if (!any) throw Error("empty region: normalization ROI");
    if (mr <= 0.0) throw Error("zero field: cannot normalize by ROI maximum");
    sr = 1.0 / mr;
    st = mt > 0.0 ? 1.0 / mt : 0.0;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < region.size(); ++i)
    if (region.data()[i]) total += std::abs(sr * ref.data()[i] - st * test.data()[i]);
  return 100.0 * total / static_cast<double>(n);
}

double mae_hotspot(const volume::ScalarVolume& ref, const volume::ScalarVolume& test, const Mask& roi,
                   double fraction, bool raw) {
  const Mask hot = solver::hotspot_mask(ref, roi, fraction);
  return mae(ref, test, hot, raw, &roi);
}

MetricsReport evaluate_labels(const volume::LabelVolume& truth, const volume::LabelVolume& test) {
  if (!truth.same_grid(test)) throw Error("shape mismatch: truth and test labels");
  MetricsReport r;
  r.tissues.resize(volume::kTissueCount);
  parallel_for(1, volume::kTissueCount + 1, [&](int lo, int hi) {
    for (int id = lo; id < hi; ++id) {
      TissueScore& t = r.tissues[id - 1];
      t.id = id;
      const Mask a = label_mask(truth, id), b = label_mask(test, id);
      t.truth_voxels = count(a);
      t.test_voxels = count(b);
      t.dice = t.truth_voxels + t.test_voxels ? dice(a, b) : kNan;
      if (t.truth_voxels && t.test_voxels) {
        t.hd_directed = hausdorff_directed(b, a);
        t.hd_symmetric = std::max(t.hd_directed, hausdorff_directed(a, b));
      } else {
        t.hd_directed = t.hd_symmetric = kNan;
      }
    }
  });
  return r;
}

double mean_dice(const MetricsReport& report, std::size_t min_voxels) {
  double sum = 0.0;
  int n = 0;
  for (const auto& t : report.tissues)
    if (t.truth_voxels >= std::max<std::size_t>(min_voxels, 1) && !std::isnan(t.dice)) {
      sum += t.dice;
      ++n;
    }
  if (n == 0) throw Error("no tissues qualify for mean Dice");
  return sum / n;
}

std::string MetricsReport::text() const {
  std::string out;
  char line[200];
  std::snprintf(line, sizeof line, "subject %s  model R^%s\n", subject.empty() ? "-" : subject.c_str(),
                variant.empty() ? "?" : variant.c_str());
  out += line;
  std::snprintf(line, sizeof line, "%-20s %10s %10s %12s %12s\n", "tissue", "voxels", "Dice [%]", "HD dir [mm]",
                "HD sym [mm]");
  out += line;
  for (const auto& t : tissues) {
    std::snprintf(line, sizeof line, "%-20s %10zu %10.2f %12.3f %12.3f\n", solver::tissue_name(t.id),
                  t.truth_voxels, t.dice, t.hd_directed, t.hd_symmetric);
    out += line;
  }
  if (mae >= 0.0) {
    std::snprintf(line, sizeof line, "MAE [%%] %.4f   MAE_0.7 [%%] %.4f   MAE self [%%] %.4f\n", mae, mae_hot,
                  mae_self);
    out += line;
  }
  return out;
}

std::string MetricsReport::key_values() const {
  std::string out;
  char line[160];
  out += "subject=" + subject + "\n";
  out += "variant=" + variant + "\n";
  for (const auto& t : tissues) {
    std::snprintf(line, sizeof line, "tissue.%d.voxels=%zu\ntissue.%d.dice=%.17g\ntissue.%d.hd_directed=%.17g\n"
                  "tissue.%d.hd_symmetric=%.17g\n",
                  t.id, t.truth_voxels, t.id, t.dice, t.id, t.hd_directed, t.id, t.hd_symmetric);
    out += line;
  }
  if (mae >= 0.0) {
    std::snprintf(line, sizeof line, "mae=%.17g\nmae_0.7=%.17g\nmae_self=%.17g\n", mae, mae_hot, mae_self);
    out += line;
  }
  return out;
}

}  // namespace forktms::metrics
