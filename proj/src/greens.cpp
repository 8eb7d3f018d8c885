#include "sadovskii/greens.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <stdexcept>

namespace sadovskii {

namespace {

constexpr double c_1o2pi = 0.15915494309189533577;  // 1/(2 pi)
constexpr double c_1o4pi = 0.07957747154594766788;  // 1/(4 pi)

void require_interior(double x2, double y2) {
  if (!(x2 > 0.0) || !(y2 > 0.0))
    throw std::invalid_argument("green kernel: both points must satisfy x2 > 0");
}

// corner antiderivative of log|r|: d^2 P / dx dy = log sqrt(x^2 + y^2)
double log_corner(double x, double y) {
  if (x == 0.0 || y == 0.0) return 0.0;
  return 0.5 * x * y * std::log(x * x + y * y) - 1.5 * x * y +
         0.5 * x * x * std::atan(y / x) + 0.5 * y * y * std::atan(x / y);
}

}  // namespace

double green_kernel(double x1, double x2, double y1, double y2) {
  require_interior(x2, y2);
  double d1 = x1 - y1, d2 = x2 - y2;
  double dd = d1 * d1 + d2 * d2;
  if (dd == 0.0) throw std::invalid_argument("green kernel: coincident points");
  return c_1o4pi * std::log1p(4.0 * x2 * y2 / dd);
}

KernelSplit kernel_split(double x1, double x2, double y1, double y2) {
  require_interior(x2, y2);
  double d1 = x1 - y1, d2 = x2 - y2, s2 = x2 + y2;
  double dist = std::sqrt(d1 * d1 + d2 * d2);
  if (dist == 0.0) throw std::invalid_argument("green kernel: coincident points");
  KernelSplit ks;
  ks.free_part = -c_1o2pi * std::log(dist);
  ks.image_part = c_1o2pi * std::log(std::sqrt(d1 * d1 + s2 * s2));
  return ks;
}

double free_log_cell_mean(double dx1, double dx2, double h1, double h2) {
  double a = dx1 - 0.5 * h1, b = dx1 + 0.5 * h1;
  double c = dx2 - 0.5 * h2, d = dx2 + 0.5 * h2;
  // d^2/dxdy log_corner = log|r| already, no square-root factor left over
  double integral = log_corner(b, d) - log_corner(a, d) - log_corner(b, c) + log_corner(a, c);
  return integral / (h1 * h2);
}

// ----------------------------------------------------------------------------
// FieldEvaluator

struct FieldEvaluator::Impl {
  int n1, n2;
  int p1, p2;  // padded transform size, 2*n1 x 2*n2
  double h1, h2;

  // direct-path kernel tables. tf: free part over offsets
  // (di, dj) in [-(n1-1), n1-1] x [-(n2-1), n2-1]; ti: image part over
  // (di, s) with s = jx + jy + 1 in [1, 2*n2-1].
  std::vector<double> tf, ti;
  int tf_stride = 0;

  // spectra of the padded kernels and FFT workspace
  fftw_complex* khat_free = nullptr;
  fftw_complex* khat_img = nullptr;
  double* ra = nullptr;
  double* rb = nullptr;
  fftw_complex* ca = nullptr;
  fftw_complex* cb = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  std::size_t spectrum_size() const {
    return static_cast<std::size_t>(p2) * (p1 / 2 + 1);
  }

  double tf_at(int di, int dj) const {
    return tf[static_cast<std::size_t>(dj + n2 - 1) * tf_stride + (di + n1 - 1)];
  }
  double ti_at(int di, int s) const {
    return ti[static_cast<std::size_t>(s) * tf_stride + (di + n1 - 1)];
  }

  ~Impl() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    fftw_free(khat_free);
    fftw_free(khat_img);
    fftw_free(ra);
    fftw_free(rb);
    fftw_free(ca);
    fftw_free(cb);
  }
};

FieldEvaluator::FieldEvaluator(const HalfPlaneGrid& grid) : grid_(grid), impl_(new Impl) {
  Impl& im = *impl_;
  im.n1 = grid.n1;
  im.n2 = grid.n2;
  im.h1 = grid.h1;
  im.h2 = grid.h2;
  im.p1 = 2 * grid.n1;
  im.p2 = 2 * grid.n2;

  // offset tables; both kernels are even in the horizontal offset
  im.tf_stride = 2 * im.n1 - 1;
  im.tf.assign(static_cast<std::size_t>(2 * im.n2 - 1) * im.tf_stride, 0.0);
  im.ti.assign(static_cast<std::size_t>(2 * im.n2) * im.tf_stride, 0.0);
  for (int dj = -(im.n2 - 1); dj <= im.n2 - 1; ++dj)
    for (int di = 0; di <= im.n1 - 1; ++di) {
      double v = -c_1o2pi * free_log_cell_mean(di * im.h1, dj * im.h2, im.h1, im.h2);
      im.tf[static_cast<std::size_t>(dj + im.n2 - 1) * im.tf_stride + (di + im.n1 - 1)] = v;
      im.tf[static_cast<std::size_t>(dj + im.n2 - 1) * im.tf_stride + (-di + im.n1 - 1)] = v;
    }
  for (int s = 1; s <= 2 * im.n2 - 1; ++s)
    for (int di = 0; di <= im.n1 - 1; ++di) {
      double v = c_1o2pi * free_log_cell_mean(di * im.h1, s * im.h2, im.h1, im.h2);
      im.ti[static_cast<std::size_t>(s) * im.tf_stride + (di + im.n1 - 1)] = v;
      im.ti[static_cast<std::size_t>(s) * im.tf_stride + (-di + im.n1 - 1)] = v;
    }

  // padded kernels and deterministic plans
  std::size_t rn = static_cast<std::size_t>(im.p1) * im.p2;
  std::size_t cn = im.spectrum_size();
  im.ra = fftw_alloc_real(rn);
  im.rb = fftw_alloc_real(rn);
  im.ca = fftw_alloc_complex(cn);
  im.cb = fftw_alloc_complex(cn);
  im.khat_free = fftw_alloc_complex(cn);
  im.khat_img = fftw_alloc_complex(cn);
  if (!im.ra || !im.rb || !im.ca || !im.cb || !im.khat_free || !im.khat_img)
    throw std::bad_alloc();

  im.fwd = fftw_plan_dft_r2c_2d(im.p2, im.p1, im.ra, im.ca, FFTW_ESTIMATE);
  im.bwd = fftw_plan_dft_c2r_2d(im.p2, im.p1, im.cb, im.rb, FFTW_ESTIMATE);
  if (!im.fwd || !im.bwd) throw std::runtime_error("field evaluator: FFT plan creation failed");

  auto wrapped = [](int p, int period) { return p <= period / 2 ? p : p - period; };
  for (int q = 0; q < im.p2; ++q)
    for (int p = 0; p < im.p1; ++p) {
      int dp = wrapped(p, im.p1);
      int dq = wrapped(q, im.p2);
      im.ra[static_cast<std::size_t>(q) * im.p1 + p] =
          -c_1o2pi * free_log_cell_mean(dp * im.h1, dq * im.h2, im.h1, im.h2);
    }
  fftw_execute(im.fwd);
  std::memcpy(im.khat_free, im.ca, cn * sizeof(fftw_complex));

  // image rows are indexed by the height sum s = jx + jy + 1 >= 1; row 0 is
  // never read and stays zero
  for (int q = 0; q < im.p2; ++q)
    for (int p = 0; p < im.p1; ++p) {
      int dp = wrapped(p, im.p1);
      im.ra[static_cast<std::size_t>(q) * im.p1 + p] =
          q == 0 ? 0.0 : c_1o2pi * free_log_cell_mean(dp * im.h1, q * im.h2, im.h1, im.h2);
    }
  fftw_execute(im.fwd);
  std::memcpy(im.khat_img, im.ca, cn * sizeof(fftw_complex));
}

FieldEvaluator::~FieldEvaluator() = default;

StreamField FieldEvaluator::direct(const PatchDensity& w) const {
  if (w.grid != grid_) throw std::invalid_argument("field evaluator: grid mismatch");
  const Impl& im = *impl_;
  StreamField f;
  f.grid = grid_;
  f.provenance = StreamField::Provenance::direct;
  f.psi.assign(grid_.cell_count(), 0.0);

  // skip empty source cells; relaxed patches are sparse on the window
  struct Src {
    int i, j;
    double v;
  };
  std::vector<Src> src;
  src.reserve(1024);
  for (int j = 0; j < im.n2; ++j)
    for (int i = 0; i < im.n1; ++i)
      if (double v = w.at(i, j); v != 0.0) src.push_back({i, j, v});

  double area = grid_.cell_area();
  for (int j = 0; j < im.n2; ++j)
    for (int i = 0; i < im.n1; ++i) {
      CompensatedSum acc;
      for (const Src& s : src)
        acc.add(s.v * (im.tf_at(i - s.i, j - s.j) + im.ti_at(i - s.i, j + s.j + 1)));
      f.psi[static_cast<std::size_t>(j) * im.n1 + i] = area * acc.value();
    }
  return f;
}

StreamField FieldEvaluator::fast(const PatchDensity& w) const {
  if (w.grid != grid_) throw std::invalid_argument("field evaluator: grid mismatch");
  const Impl& im = *impl_;
  std::size_t rn = static_cast<std::size_t>(im.p1) * im.p2;
  std::size_t cn = im.spectrum_size();

  StreamField f;
  f.grid = grid_;
  f.provenance = StreamField::Provenance::fast;
  f.psi.assign(grid_.cell_count(), 0.0);
  double scale = grid_.cell_area() / (static_cast<double>(im.p1) * im.p2);

  auto multiply_into_cb = [&](const fftw_complex* k) {
    for (std::size_t t = 0; t < cn; ++t) {
      double ar = im.ca[t][0], ai = im.ca[t][1];
      double br = k[t][0], bi = k[t][1];
      im.cb[t][0] = ar * br - ai * bi;
      im.cb[t][1] = ar * bi + ai * br;
    }
  };

  // free part: plain zero-padded convolution
  std::memset(im.ra, 0, rn * sizeof(double));
  for (int j = 0; j < im.n2; ++j)
    std::memcpy(im.ra + static_cast<std::size_t>(j) * im.p1,
                w.values.data() + static_cast<std::size_t>(j) * im.n1, im.n1 * sizeof(double));
  fftw_execute(im.fwd);
  multiply_into_cb(im.khat_free);
  fftw_execute(im.bwd);
  for (int j = 0; j < im.n2; ++j)
    for (int i = 0; i < im.n1; ++i)
      f.psi[static_cast<std::size_t>(j) * im.n1 + i] =
          scale * im.rb[static_cast<std::size_t>(j) * im.p1 + i];

  // image part: row reversal turns the x2 correlation into a convolution
  // read out at row offset n2: psi_img(jx) = sum_jy K(jx + jy + 1) w(jy)
  std::memset(im.ra, 0, rn * sizeof(double));
  for (int j = 0; j < im.n2; ++j)
    std::memcpy(im.ra + static_cast<std::size_t>(j) * im.p1,
                w.values.data() + static_cast<std::size_t>(im.n2 - 1 - j) * im.n1,
                im.n1 * sizeof(double));
  fftw_execute(im.fwd);
  multiply_into_cb(im.khat_img);
  fftw_execute(im.bwd);
  for (int j = 0; j < im.n2; ++j)
    for (int i = 0; i < im.n1; ++i)
      f.psi[static_cast<std::size_t>(j) * im.n1 + i] +=
          scale * im.rb[static_cast<std::size_t>(j + im.n2) * im.p1 + i];

  return f;
}

double FieldEvaluator::direct_at(const PatchDensity& w, double x1, double x2) const {
  if (w.grid != grid_) throw std::invalid_argument("field evaluator: grid mismatch");
  if (x2 < 0.0) throw std::invalid_argument("direct_at: x2 must be >= 0");
  const Impl& im = *impl_;
  CompensatedSum acc;
  for (int j = 0; j < im.n2; ++j) {
    double y2 = grid_.x2(j);
    for (int i = 0; i < im.n1; ++i) {
      double v = w.at(i, j);
      if (v == 0.0) continue;
      double d1 = x1 - grid_.x1(i);
      acc.add(v * (free_log_cell_mean(d1, x2 + y2, im.h1, im.h2) -
                   free_log_cell_mean(d1, x2 - y2, im.h1, im.h2)));
    }
  }
  return c_1o2pi * grid_.cell_area() * acc.value();
}

double FieldEvaluator::energy(const PatchDensity& w, const StreamField& psi) const {
  if (w.grid != grid_ || psi.grid != grid_)
    throw std::invalid_argument("energy: grid mismatch");
  CompensatedSum acc;
  for (std::size_t t = 0; t < w.values.size(); ++t) acc.add(psi.psi[t] * w.values[t]);
  return 0.5 * grid_.cell_area() * acc.value();
}

double FieldEvaluator::energy(const PatchDensity& w) const { return energy(w, fast(w)); }

StreamField stream_field_direct(const PatchDensity& w) {
  return FieldEvaluator(w.grid).direct(w);
}

StreamField stream_field_fast(const PatchDensity& w) { return FieldEvaluator(w.grid).fast(w); }

double energy(const PatchDensity& w) { return FieldEvaluator(w.grid).energy(w); }

// ----------------------------------------------------------------------------
// axis velocity

double horizontal_velocity_on_axis(const PatchDensity& w, double x1) {
  const HalfPlaneGrid& g = w.grid;
  CompensatedSum acc;
  // mirror cells are summed as one bracket; for a symmetric patch the two
  // addends swap under x1 -> -x1, so evenness holds bitwise
  for (int j = 0; j < g.n2; ++j) {
    double y2 = g.x2(j);
    for (int i = 0; i < g.n1 / 2; ++i) {
      int ir = g.n1 - 1 - i;
      double vl = w.at(i, j), vr = w.at(ir, j);
      if (vl == 0.0 && vr == 0.0) continue;
      double dl = g.x1(i) - x1, dr = g.x1(ir) - x1;
      acc.add(vl * (y2 / (dl * dl + y2 * y2)) + vr * (y2 / (dr * dr + y2 * y2)));
    }
  }
  return 2.0 * c_1o2pi * g.cell_area() * acc.value();  // (1/pi) prefactor
}

double vertical_axis_velocity_quadrature(const PatchDensity& w, double x2) {
  if (x2 < 0.0) throw std::invalid_argument("axis velocity: x2 must be >= 0");
  const HalfPlaneGrid& g = w.grid;
  CompensatedSum acc;
  for (int j = 0; j < g.n2; ++j) {
    double s = x2 + g.x2(j);
    for (int i = 0; i < g.n1; ++i) {
      double v = w.at(i, j);
      if (v == 0.0) continue;
      double y1 = g.x1(i);
      acc.add(v * s / (y1 * y1 + s * s));
    }
  }
  return c_1o2pi * g.cell_area() * acc.value();
}

double nonlocal_axis_profile(const BoundaryCurve& boundary, double h2, double x2) {
  if (x2 < 0.0) throw std::invalid_argument("nonlocal axis profile: x2 must be >= 0");
  CompensatedSum acc;
  for (const BoundarySample& b : boundary.samples) {
    if (b.l <= 0.0) continue;
    acc.add(std::atan(b.l / (b.s + x2)));
  }
  return 2.0 * c_1o2pi * h2 * acc.value();  // (1/pi) prefactor
}

}  // namespace sadovskii
