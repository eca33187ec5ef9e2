#include "unrisk/moments.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <thread>

namespace unrisk {

static_assert(std::endian::native == std::endian::little,
              "moment files are written in native little-endian layout");

const Mat& MomentSet::pair_ref(int v, int w) const {
  if (v == 0 && w == 1) return pair01;
  if (v == 0 && w == 2) return pair02;
  if (v == 1 && w == 2) return pair12;
  throw InputError("pair_ref: need v < w");
}

Mat MomentSet::pair(int v, int w) const {
  if (v == w) throw InputError("pair: views must differ");
  if (v < w) return pair_ref(v, w);
  return pair_ref(w, v).transpose();
}

// ---------------------------------------------------------------------------
// Sources
// ---------------------------------------------------------------------------

ModelTripleSource::ModelTripleSource(const ViewArrays& samples, const ViewLossModel& model)
    : samples_(samples), model_(model) {
  if (samples.size() == 0) throw InputError("empty sample set");
}

int ModelTripleSource::dim(int) const { return model_.k(); }

void ModelTripleSource::visit(std::size_t begin, std::size_t end,
                              const std::function<void(std::size_t, const Vec&, const Vec&, const Vec&)>& fn) const {
  for (std::size_t i = begin; i < end; ++i) {
    const Views x = samples_.sample(i);
    Vec h1 = model_.loss_vector(x[0], 0);
    Vec h2 = model_.loss_vector(x[1], 1);
    Vec h3 = model_.loss_vector(x[2], 2);
    if (!h1.allFinite() || !h2.allFinite() || !h3.allFinite())
      throw NumericError("non-finite loss vector at sample " + std::to_string(i));
    fn(i, h1, h2, h3);
  }
}

ExtendedTripleSource::ExtendedTripleSource(const ViewArrays& samples,
                                           const ViewLossModel& model_at_theta0,
                                           const Vec& theta_query, const ScaleConstants& scale)
    : samples_(samples),
      model0_(model_at_theta0),
      model_query_(model_at_theta0.with_theta(theta_query)) {
  if (samples.size() == 0) throw InputError("empty sample set");
  if (model0_.d() > 0 && !(scale.B > 0.0))
    throw NumericError("degenerate feature scale: B = 0");
  ratio_ = model0_.d() > 0 ? scale.tau / scale.B : 0.0;
}

int ExtendedTripleSource::dim(int) const { return model0_.k() * (model0_.d() + 1); }

void ExtendedTripleSource::visit(std::size_t begin, std::size_t end,
                                 const std::function<void(std::size_t, const Vec&, const Vec&, const Vec&)>& fn) const {
  const int k = model0_.k();
  const int d = model0_.d();
  std::array<Vec, 3> h;
  for (std::size_t i = begin; i < end; ++i) {
    const Views x = samples_.sample(i);
    for (int v = 0; v < 3; ++v) {
      Vec hv(k * (d + 1));
      hv.head(k) = model0_.loss_vector(x[v], v);
      if (d > 0) {
        const Mat g = model_query_.grad_loss_vector(x[v], v);  // k x d
        for (int r = 0; r < d; ++r) hv.segment(k * (r + 1), k) = ratio_ * g.col(r);
      }
      if (!hv.allFinite())
        throw NumericError("non-finite extended feature at sample " + std::to_string(i));
      h[v] = std::move(hv);
    }
    fn(i, h[0], h[1], h[2]);
  }
}

void AugmentedTripleSource::visit(std::size_t begin, std::size_t end,
                                  const std::function<void(std::size_t, const Vec&, const Vec&, const Vec&)>& fn) const {
  inner_.visit(begin, end, [&](std::size_t i, const Vec& h1, const Vec& h2, const Vec& h3) {
    std::array<Vec, 3> ext;
    const std::array<const Vec*, 3> in = {&h1, &h2, &h3};
    for (int v = 0; v < 3; ++v) {
      ext[v] = Vec(in[v]->size() + 1);
      ext[v].head(in[v]->size()) = *in[v];
      ext[v][in[v]->size()] = 1.0;
    }
    fn(i, ext[0], ext[1], ext[2]);
  });
}

MatrixTripleSource::MatrixTripleSource(std::array<Mat, 3> rows) : rows_(std::move(rows)) {
  if (rows_[0].rows() == 0) throw InputError("empty sample set");
  if (rows_[0].rows() != rows_[1].rows() || rows_[1].rows() != rows_[2].rows())
    throw InputError("view row counts differ");
}

void MatrixTripleSource::visit(std::size_t begin, std::size_t end,
                               const std::function<void(std::size_t, const Vec&, const Vec&, const Vec&)>& fn) const {
  for (std::size_t i = begin; i < end; ++i) {
    Vec h1 = rows_[0].row(static_cast<Eigen::Index>(i)).transpose();
    Vec h2 = rows_[1].row(static_cast<Eigen::Index>(i)).transpose();
    Vec h3 = rows_[2].row(static_cast<Eigen::Index>(i)).transpose();
    if (!h1.allFinite() || !h2.allFinite() || !h3.allFinite())
      throw NumericError("non-finite loss vector at sample " + std::to_string(i));
    fn(i, h1, h2, h3);
  }
}

// ---------------------------------------------------------------------------
// Accumulation
// ---------------------------------------------------------------------------

MomentAccumulator::MomentAccumulator(std::array<int, 3> dims, bool dense_triple)
    : dim_(dims), dense_(dense_triple) {
  for (int v = 0; v < 3; ++v) first_[v].assign(static_cast<std::size_t>(dim_[v]), 0.0L);
  p01_.assign(static_cast<std::size_t>(dim_[0]) * dim_[1], 0.0L);
  p02_.assign(static_cast<std::size_t>(dim_[0]) * dim_[2], 0.0L);
  p12_.assign(static_cast<std::size_t>(dim_[1]) * dim_[2], 0.0L);
  if (dense_) triple_.assign(static_cast<std::size_t>(dim_[0]) * dim_[1] * dim_[2], 0.0L);
}

void MomentAccumulator::add(const Vec& h1, const Vec& h2, const Vec& h3) {
  const int d1 = dim_[0], d2 = dim_[1], d3 = dim_[2];
  for (int i = 0; i < d1; ++i) first_[0][i] += h1[i];
  for (int i = 0; i < d2; ++i) first_[1][i] += h2[i];
  for (int i = 0; i < d3; ++i) first_[2][i] += h3[i];
  for (int i = 0; i < d1; ++i) {
    const long double a = h1[i];
    for (int j = 0; j < d2; ++j) p01_[static_cast<std::size_t>(i) * d2 + j] += a * h2[j];
    for (int j = 0; j < d3; ++j) p02_[static_cast<std::size_t>(i) * d3 + j] += a * h3[j];
  }
  for (int i = 0; i < d2; ++i) {
    const long double a = h2[i];
    for (int j = 0; j < d3; ++j) p12_[static_cast<std::size_t>(i) * d3 + j] += a * h3[j];
  }
  if (dense_) {
    for (int i = 0; i < d1; ++i) {
      const long double a = h1[i];
      for (int j = 0; j < d2; ++j) {
        const long double ab = a * h2[j];
        long double* row = triple_.data() + (static_cast<std::size_t>(i) * d2 + j) * d3;
        for (int l = 0; l < d3; ++l) row[l] += ab * h3[l];
      }
    }
  }
  ++m_;
}

void MomentAccumulator::add_pair_block(const Mat& partial, std::vector<long double>& buf) {
  const int r = static_cast<int>(partial.rows());
  const int c = static_cast<int>(partial.cols());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) buf[static_cast<std::size_t>(i) * c + j] += partial(i, j);
}

void MomentAccumulator::add_rows(const Mat& h1, const Mat& h2, const Mat& h3) {
  const Eigen::Index n = h1.rows();
  for (int i = 0; i < dim_[0]; ++i) first_[0][i] += h1.col(i).sum();
  for (int i = 0; i < dim_[1]; ++i) first_[1][i] += h2.col(i).sum();
  for (int i = 0; i < dim_[2]; ++i) first_[2][i] += h3.col(i).sum();
  add_pair_block(h1.transpose() * h2, p01_);
  add_pair_block(h1.transpose() * h3, p02_);
  add_pair_block(h2.transpose() * h3, p12_);
  if (dense_) {
    const int d2 = dim_[1], d3 = dim_[2];
    for (Eigen::Index s = 0; s < n; ++s) {
      for (int i = 0; i < dim_[0]; ++i) {
        const long double a = h1(s, i);
        if (a == 0.0L) continue;
        for (int j = 0; j < d2; ++j) {
          const long double ab = a * h2(s, j);
          long double* row = triple_.data() + (static_cast<std::size_t>(i) * d2 + j) * d3;
          for (int l = 0; l < d3; ++l) row[l] += ab * h3(s, l);
        }
      }
    }
  }
  m_ += static_cast<std::size_t>(n);
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  for (int v = 0; v < 3; ++v)
    for (std::size_t i = 0; i < first_[v].size(); ++i) first_[v][i] += other.first_[v][i];
  for (std::size_t i = 0; i < p01_.size(); ++i) p01_[i] += other.p01_[i];
  for (std::size_t i = 0; i < p02_.size(); ++i) p02_[i] += other.p02_[i];
  for (std::size_t i = 0; i < p12_.size(); ++i) p12_[i] += other.p12_[i];
  if (dense_)
    for (std::size_t i = 0; i < triple_.size(); ++i) triple_[i] += other.triple_[i];
  m_ += other.m_;
}

MomentSet MomentAccumulator::finalize() const {
  if (m_ == 0) throw InputError("empty sample set");
  MomentSet out;
  out.m = m_;
  out.dim = dim_;
  const long double inv = 1.0L / static_cast<long double>(m_);
  for (int v = 0; v < 3; ++v) {
    out.first[v] = Vec(dim_[v]);
    for (int i = 0; i < dim_[v]; ++i)
      out.first[v][i] = static_cast<double>(first_[v][i] * inv);
  }
  auto to_mat = [&](const std::vector<long double>& buf, int r, int c) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        m(i, j) = static_cast<double>(buf[static_cast<std::size_t>(i) * c + j] * inv);
    return m;
  };
  out.pair01 = to_mat(p01_, dim_[0], dim_[1]);
  out.pair02 = to_mat(p02_, dim_[0], dim_[2]);
  out.pair12 = to_mat(p12_, dim_[1], dim_[2]);
  if (dense_) {
    Tensor3 t(dim_[0], dim_[1], dim_[2]);
    for (std::size_t i = 0; i < triple_.size(); ++i)
      t.raw()[i] = static_cast<double>(triple_[i] * inv);
    out.triple = std::move(t);
  }
  return out;
}

namespace {

constexpr std::size_t kBlockRows = 512;

// buffer rows into block matrices and flush through the BLAS path
void accumulate_range(const TripleSource& source, std::size_t lo, std::size_t hi,
                      MomentAccumulator& acc, const std::array<int, 3>& dims) {
  Mat h1(kBlockRows, dims[0]), h2(kBlockRows, dims[1]), h3(kBlockRows, dims[2]);
  Eigen::Index fill = 0;
  auto flush = [&] {
    if (fill == 0) return;
    acc.add_rows(h1.topRows(fill), h2.topRows(fill), h3.topRows(fill));
    fill = 0;
  };
  source.visit(lo, hi, [&](std::size_t, const Vec& a, const Vec& b, const Vec& c) {
    h1.row(fill) = a.transpose();
    h2.row(fill) = b.transpose();
    h3.row(fill) = c.transpose();
    if (++fill == static_cast<Eigen::Index>(kBlockRows)) flush();
  });
  flush();
}

}  // namespace

MomentSet accumulate_moments(const TripleSource& source, int dense_cap, int n_workers) {
  const std::size_t m = source.size();
  if (m == 0) throw InputError("empty sample set");
  const std::array<int, 3> dims = {source.dim(0), source.dim(1), source.dim(2)};
  const bool dense = std::max({dims[0], dims[1], dims[2]}) <= dense_cap;

  n_workers = std::max(1, n_workers);
  if (static_cast<std::size_t>(n_workers) > m) n_workers = static_cast<int>(m);

  std::vector<MomentAccumulator> parts;
  parts.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) parts.emplace_back(dims, dense);

  if (n_workers == 1) {
    accumulate_range(source, 0, m, parts[0], dims);
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(n_workers);
    const std::size_t chunk = (m + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(m, lo + chunk);
      threads.emplace_back([&, w, lo, hi] {
        try {
          if (lo < hi) accumulate_range(source, lo, hi, parts[w], dims);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // merge in index order
  for (int w = 1; w < n_workers; ++w) parts[0].merge(parts[w]);
  return parts[0].finalize();
}

MomentSet accumulate_moments(const ViewArrays& samples, const ViewLossModel& model,
                             int dense_cap, int n_workers) {
  ModelTripleSource src(samples, model);
  return accumulate_moments(src, dense_cap, n_workers);
}

// ---------------------------------------------------------------------------
// Scales and extended features
// ---------------------------------------------------------------------------

Vec extended_feature(const ViewLossModel& model, const Vec& theta0, const Vec& theta_query,
                     const Vec& x_v, int v, const ScaleConstants& scale) {
  const int k = model.k();
  const int d = model.d();
  const ViewLossModel m0 = model.with_theta(theta0);
  Vec h = m0.loss_vector(x_v, v);
  if (d == 0) return h;
  if (!(scale.B > 0.0)) throw NumericError("degenerate feature scale: B = 0");
  Vec out(k * (d + 1));
  out.head(k) = h;
  const Mat g = model.with_theta(theta_query).grad_loss_vector(x_v, v);
  const double ratio = scale.tau / scale.B;
  for (int r = 0; r < d; ++r) out.segment(k * (r + 1), k) = ratio * g.col(r);
  return out;
}

ScaleConstants estimate_scale_constants(const ViewArrays& samples, const ViewLossModel& model,
                                        const Vec& theta0) {
  const std::size_t m = samples.size();
  if (m == 0) throw InputError("empty sample set");
  const ViewLossModel m0 = model.with_theta(theta0);
  const auto sums = m0.scale_sums(samples);
  ScaleConstants s;
  s.tau = std::sqrt(sums.first / static_cast<double>(m));
  s.B = std::sqrt(sums.second / static_cast<double>(m));
  return s;
}

// ---------------------------------------------------------------------------
// Binary cache format: magic, version, k-slot, dims, m, row-major doubles.
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kMomentMagic = 0x554d4f4d;  // "MOMU"
constexpr std::uint32_t kMomentVersion = 1;

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw InputError("moment file truncated");
  return v;
}

void write_doubles(std::ofstream& f, const double* p, std::size_t n) {
  f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::ifstream& f, double* p, std::size_t n) {
  f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw InputError("moment file truncated");
}

}  // namespace

void MomentSet::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string() + " for writing");
  write_pod(f, kMomentMagic);
  write_pod(f, kMomentVersion);
  write_pod(f, static_cast<std::uint32_t>(dim[0]));  // k-slot: loss-vector dims
  write_pod(f, static_cast<std::uint32_t>(dim[1]));
  write_pod(f, static_cast<std::uint32_t>(dim[2]));
  write_pod(f, static_cast<std::uint64_t>(m));
  write_pod(f, static_cast<std::uint32_t>(triple.has_value() ? 1 : 0));
  for (int v = 0; v < 3; ++v) write_doubles(f, first[v].data(), first[v].size());
  auto dump = [&](const Mat& mt) {
    for (Eigen::Index i = 0; i < mt.rows(); ++i)
      for (Eigen::Index j = 0; j < mt.cols(); ++j) write_pod(f, mt(i, j));
  };
  dump(pair01);
  dump(pair02);
  dump(pair12);
  if (triple) write_doubles(f, triple->raw().data(), triple->raw().size());
  if (!f) throw NumericError("write failure: " + path.string());
}

MomentSet MomentSet::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string());
  if (read_pod<std::uint32_t>(f) != kMomentMagic) throw InputError("bad moment file magic");
  if (read_pod<std::uint32_t>(f) != kMomentVersion) throw InputError("unsupported moment file version");
  MomentSet out;
  for (int v = 0; v < 3; ++v) out.dim[v] = static_cast<int>(read_pod<std::uint32_t>(f));
  out.m = read_pod<std::uint64_t>(f);
  const bool has_triple = read_pod<std::uint32_t>(f) != 0;
  for (int v = 0; v < 3; ++v) {
    out.first[v] = Vec(out.dim[v]);
    read_doubles(f, out.first[v].data(), static_cast<std::size_t>(out.dim[v]));
  }
  auto slurp = [&](int r, int c) {
    Mat mt(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) mt(i, j) = read_pod<double>(f);
    return mt;
  };
  out.pair01 = slurp(out.dim[0], out.dim[1]);
  out.pair02 = slurp(out.dim[0], out.dim[2]);
  out.pair12 = slurp(out.dim[1], out.dim[2]);
  if (has_triple) {
    Tensor3 t(out.dim[0], out.dim[1], out.dim[2]);
    read_doubles(f, t.raw().data(), t.raw().size());
    out.triple = std::move(t);
  }
  return out;
}

}  // namespace unrisk
