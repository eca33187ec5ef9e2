#include "unrisk/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace unrisk {

static_assert(std::endian::native == std::endian::little,
              "dataset files are written in native little-endian layout");

namespace {

void check_simplex(const Vec& pi) {
  if (pi.size() < 1) throw InputError("empty prior");
  if (pi.minCoeff() < 0.0 || std::abs(pi.sum() - 1.0) > 1e-9)
    throw InputError("prior is not on the simplex");
}

int draw_categorical(const Vec& pi, double u) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < pi.size(); ++j) {
    acc += pi[j];
    if (u < acc) return static_cast<int>(j);
  }
  return static_cast<int>(pi.size() - 1);
}

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw InputError("dataset file truncated");
  return v;
}

constexpr std::uint32_t kDatasetMagic = 0x44564d55;   // "UMVD"
constexpr std::uint32_t kSequenceMagic = 0x51455355;  // "USEQ"
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

// ---------------------------------------------------------------------------
// Multi-view generator
// ---------------------------------------------------------------------------

std::array<Mat, 3> generator_means(const GeneratorSpec& spec, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x6d65616eULL));  // dedicated substream for the means
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::array<Mat, 3> mu;
  for (int v = 0; v < 3; ++v) {
    Mat g(spec.k, spec.dims[v]);
    for (int y = 0; y < spec.k; ++y)
      for (int p = 0; p < spec.dims[v]; ++p) g(y, p) = gauss(rng);
    if (spec.dims[v] >= spec.k) {
      // orthonormal class directions scaled by mean_scale, so separation is
      // controlled by the config instead of the draw
      Eigen::HouseholderQR<Mat> qr(g.transpose());
      const Mat q = qr.householderQ() * Mat::Identity(spec.dims[v], spec.k);
      mu[v] = spec.mean_scale * q.transpose();
    } else {
      mu[v] = spec.mean_scale * g;
    }
  }
  return mu;
}

MultiViewDataset gen_multiview(const GeneratorSpec& spec, std::size_t m, std::uint64_t seed) {
  if (spec.k < 2) throw InputError("gen_multiview: k must be >= 2");
  for (int v = 0; v < 3; ++v)
    if (spec.dims[v] < 1) throw InputError("gen_multiview: view dims must be >= 1");
  check_simplex(spec.pi);
  if (spec.pi.size() != spec.k) throw InputError("gen_multiview: prior length != k");

  const std::array<Mat, 3> mu = generator_means(spec, seed);
  MultiViewDataset out;
  out.k = spec.k;
  out.labels.resize(m);
  for (int v = 0; v < 3; ++v) out.views.x[v] = Mat(m, spec.dims[v]);

  for (std::size_t i = 0; i < m; ++i) {
    Rng rng(mix_seed(seed, i + 1));  // per-sample substream: order-free
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int y = draw_categorical(spec.pi, unif(rng));
    out.labels[i] = y;
    for (int v = 0; v < 3; ++v)
      for (int p = 0; p < spec.dims[v]; ++p)
        out.views.x[v](i, p) = mu[v](y, p) + spec.noise * gauss(rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Patchwork images
// ---------------------------------------------------------------------------

MultiViewDataset compose_patchwork(const ImageSet& source, std::size_t m, std::uint64_t seed) {
  if (source.images.empty() || source.images.size() != source.labels.size())
    throw InputError("compose_patchwork: images and labels must align");
  const int n_pixels = source.rows * source.cols;

  std::vector<int> classes(source.labels.begin(), source.labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  const int k = static_cast<int>(classes.size());
  std::vector<std::vector<int>> by_class(k);
  for (std::size_t i = 0; i < source.labels.size(); ++i) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), source.labels[i]);
    by_class[it - classes.begin()].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < k; ++c)
    if (by_class[c].size() < 3)
      throw InputError("compose_patchwork: class " + std::to_string(classes[c]) +
                       " has fewer than 3 images");

  std::array<int, 3> vdim = {0, 0, 0};
  for (int p = 0; p < n_pixels; ++p) ++vdim[p % 3];

  MultiViewDataset out;
  out.k = k;
  out.labels.resize(m);
  for (int v = 0; v < 3; ++v) out.views.x[v] = Mat(m, vdim[v]);

  for (std::size_t s = 0; s < m; ++s) {
    Rng rng(mix_seed(seed, s + 1));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int c = draw_categorical(Vec::Constant(k, 1.0 / k), unif(rng));
    out.labels[s] = c;
    // three distinct images of the class
    const auto& pool = by_class[c];
    int pick[3];
    pick[0] = static_cast<int>(unif(rng) * pool.size());
    do { pick[1] = static_cast<int>(unif(rng) * pool.size()); } while (pick[1] == pick[0]);
    do { pick[2] = static_cast<int>(unif(rng) * pool.size()); } while (pick[2] == pick[0] || pick[2] == pick[1]);
    std::array<int, 3> at = {0, 0, 0};
    for (int p = 0; p < n_pixels; ++p) {
      const int v = p % 3;
      out.views.x[v](s, at[v]++) = source.images[pool[pick[v]]][p];
    }
  }
  return out;
}

Vec interleave_views(const Views& views, int n_pixels) {
  Vec out(n_pixels);
  std::array<int, 3> at = {0, 0, 0};
  for (int p = 0; p < n_pixels; ++p) {
    const int v = p % 3;
    out[p] = views[v][at[v]++];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dimming
// ---------------------------------------------------------------------------

Vec apply_dimming(const Vec& image, int rows, int cols, double a, DimConvention convention,
                  double max_intensity) {
  if (image.size() != static_cast<Eigen::Index>(rows) * cols)
    throw InputError("apply_dimming: image size does not match rows*cols");
  if (a < 0.0) throw InputError("apply_dimming: a must be >= 0");
  const double cr = 0.5 * (rows - 1);
  const double cc = 0.5 * (cols - 1);
  const double norm = std::sqrt(cr * cr + cc * cc);  // center-to-corner distance
  Vec out(image.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double dist = norm > 0.0 ? std::sqrt((r - cr) * (r - cr) + (c - cc) * (c - cc)) / norm : 0.0;
      const double expo = a * (dist - 0.4);
      const double factor = convention == DimConvention::Divide ? std::exp(-expo) : std::exp(expo);
      out[r * cols + c] = std::clamp(image[r * cols + c] * factor, 0.0, max_intensity);
    }
  return out;
}

ImageSet apply_dimming(const ImageSet& images, double a, DimConvention convention) {
  ImageSet out = images;
  for (Vec& img : out.images) img = apply_dimming(img, images.rows, images.cols, a, convention);
  return out;
}

ImageSet synth_image_classes(int k, int per_class, int rows, int cols, std::uint64_t seed,
                             double pixel_noise) {
  if (k < 2 || per_class < 1) throw InputError("synth_image_classes: need k >= 2, per_class >= 1");
  ImageSet out;
  out.rows = rows;
  out.cols = cols;
  // per-class templates: a few seeded Gaussian bumps
  std::vector<Vec> templates(k);
  for (int c = 0; c < k; ++c) {
    Rng rng(mix_seed(seed, 0x7431ULL + c));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vec img = Vec::Zero(rows * cols);
    const int bumps = 3;
    for (int b = 0; b < bumps; ++b) {
      const double br = unif(rng) * (rows - 1);
      const double bc = unif(rng) * (cols - 1);
      const double w = 0.08 * (rows + cols) * (0.5 + unif(rng));
      for (int r = 0; r < rows; ++r)
        for (int col = 0; col < cols; ++col) {
          const double d2 = (r - br) * (r - br) + (col - bc) * (col - bc);
          img[r * cols + col] += std::exp(-d2 / (2.0 * w * w));
        }
    }
    const double hi = img.maxCoeff();
    if (hi > 0.0) img /= hi;
    templates[c] = img;
  }
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Rng rng(mix_seed(seed, 0x1000000ULL + static_cast<std::uint64_t>(c) * per_class + i));
      std::normal_distribution<double> gauss(0.0, 1.0);
      Vec img = templates[c];
      for (Eigen::Index p = 0; p < img.size(); ++p)
        img[p] = std::clamp(img[p] + pixel_noise * gauss(rng), 0.0, 1.0);
      out.images.push_back(std::move(img));
      out.labels.push_back(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& what) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw InputError("IDX file truncated while reading " + what);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

ImageSet load_idx_images(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string());
  const std::uint32_t magic = read_be32(f, "magic");
  if (magic != 0x00000803u)
    throw InputError("bad IDX image magic in " + path.string() + " (got " +
                     std::to_string(magic) + ")");
  const std::uint32_t count = read_be32(f, "count");
  const std::uint32_t rows = read_be32(f, "rows");
  const std::uint32_t cols = read_be32(f, "cols");
  ImageSet out;
  out.rows = static_cast<int>(rows);
  out.cols = static_cast<int>(cols);
  const std::size_t npix = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> buf(npix);
  for (std::uint32_t i = 0; i < count; ++i) {
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(npix));
    if (!f) throw InputError("IDX image file truncated at image " + std::to_string(i));
    Vec img(npix);
    for (std::size_t p = 0; p < npix; ++p) img[p] = buf[p] / 255.0;
    out.images.push_back(std::move(img));
  }
  return out;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string());
  const std::uint32_t magic = read_be32(f, "magic");
  if (magic != 0x00000801u)
    throw InputError("bad IDX label magic in " + path.string() + " (got " +
                     std::to_string(magic) + ")");
  const std::uint32_t count = read_be32(f, "count");
  std::vector<unsigned char> buf(count);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
  if (!f) throw InputError("IDX label file truncated");
  return std::vector<int>(buf.begin(), buf.end());
}

ImageSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  ImageSet out = load_idx_images(images_path);
  out.labels = load_idx_labels(labels_path);
  if (out.labels.size() != out.images.size())
    throw InputError("IDX image/label count mismatch: " + std::to_string(out.images.size()) +
                     " images vs " + std::to_string(out.labels.size()) + " labels");
  return out;
}

// ---------------------------------------------------------------------------
// HMM sequences
// ---------------------------------------------------------------------------

SequenceDataset gen_hmm_sequences(const HmmGeneratorSpec& spec, std::size_t m, std::uint64_t seed) {
  if (spec.k < 1 || spec.T < 1) throw InputError("gen_hmm_sequences: bad k or T");
  if (spec.transition.rows() != spec.k || spec.transition.cols() != spec.k)
    throw InputError("gen_hmm_sequences: transition must be k x k");
  for (int i = 0; i < spec.k; ++i) {
    if (spec.transition.row(i).minCoeff() < 0.0 ||
        std::abs(spec.transition.row(i).sum() - 1.0) > 1e-9)
      throw InputError("gen_hmm_sequences: transition row " + std::to_string(i) +
                       " is not stochastic");
  }
  check_simplex(spec.initial);

  const int obs_dim = spec.emission == EmissionType::Finite
                          ? 1
                          : static_cast<int>(spec.emission_means.cols());
  if (spec.emission == EmissionType::Finite) {
    if (spec.emission_table.rows() != spec.k) throw InputError("emission table must have k rows");
    for (int i = 0; i < spec.k; ++i)
      if (spec.emission_table.row(i).minCoeff() < 0.0 ||
          std::abs(spec.emission_table.row(i).sum() - 1.0) > 1e-9)
        throw InputError("emission table row " + std::to_string(i) + " is not stochastic");
  } else {
    if (spec.emission_means.rows() != spec.k) throw InputError("emission means must have k rows");
    if (!(spec.emission_sigma > 0.0)) throw InputError("emission sigma must be positive");
  }

  SequenceDataset out;
  out.T = spec.T;
  out.k = spec.k;
  out.emission = spec.emission;
  out.obs.resize(m);
  out.labels.resize(m);

  for (std::size_t s = 0; s < m; ++s) {
    Rng rng(mix_seed(seed, s + 1));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat obs(spec.T, obs_dim);
    std::vector<int> ys(spec.T);
    int y = draw_categorical(spec.initial, unif(rng));
    for (int t = 0; t < spec.T; ++t) {
      if (t > 0) y = draw_categorical(spec.transition.row(y).transpose(), unif(rng));
      ys[t] = y;
      if (spec.emission == EmissionType::Finite) {
        obs(t, 0) = draw_categorical(spec.emission_table.row(y).transpose(), unif(rng));
      } else {
        for (int p = 0; p < obs_dim; ++p)
          obs(t, p) = spec.emission_means(y, p) + spec.emission_sigma * gauss(rng);
      }
    }
    out.obs[s] = std::move(obs);
    out.labels[s] = std::move(ys);
  }
  return out;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

void MultiViewDataset::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string() + " for writing");
  write_pod(f, kDatasetMagic);
  write_pod(f, kFormatVersion);
  write_pod(f, static_cast<std::uint64_t>(views.size()));
  write_pod(f, static_cast<std::uint32_t>(k));
  for (int v = 0; v < 3; ++v) write_pod(f, static_cast<std::uint32_t>(views.dim(v)));
  write_pod(f, static_cast<std::uint32_t>(labeled() ? 1 : 0));
  for (int v = 0; v < 3; ++v)
    for (Eigen::Index i = 0; i < views.x[v].rows(); ++i)
      for (Eigen::Index j = 0; j < views.x[v].cols(); ++j)
        write_pod(f, static_cast<float>(views.x[v](i, j)));
  if (labeled())
    for (int y : labels) write_pod(f, static_cast<std::uint32_t>(y));
  if (!f) throw NumericError("write failure: " + path.string());
}

MultiViewDataset MultiViewDataset::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string());
  if (read_pod<std::uint32_t>(f) != kDatasetMagic) throw InputError("bad dataset magic");
  if (read_pod<std::uint32_t>(f) != kFormatVersion) throw InputError("unsupported dataset version");
  const std::uint64_t m = read_pod<std::uint64_t>(f);
  MultiViewDataset out;
  out.k = static_cast<int>(read_pod<std::uint32_t>(f));
  std::array<std::uint32_t, 3> dims;
  for (int v = 0; v < 3; ++v) dims[v] = read_pod<std::uint32_t>(f);
  const bool has_labels = read_pod<std::uint32_t>(f) != 0;
  for (int v = 0; v < 3; ++v) {
    out.views.x[v] = Mat(m, dims[v]);
    for (std::uint64_t i = 0; i < m; ++i)
      for (std::uint32_t j = 0; j < dims[v]; ++j)
        out.views.x[v](static_cast<Eigen::Index>(i), j) = read_pod<float>(f);
  }
  if (has_labels) {
    out.labels.resize(m);
    for (std::uint64_t i = 0; i < m; ++i)
      out.labels[i] = static_cast<int>(read_pod<std::uint32_t>(f));
  }
  return out;
}

void SequenceDataset::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string() + " for writing");
  write_pod(f, kSequenceMagic);
  write_pod(f, kFormatVersion);
  write_pod(f, static_cast<std::uint64_t>(obs.size()));
  write_pod(f, static_cast<std::uint32_t>(T));
  write_pod(f, static_cast<std::uint32_t>(k));
  write_pod(f, static_cast<std::uint32_t>(emission == EmissionType::Finite ? 0 : 1));
  const std::uint32_t obs_dim = obs.empty() ? 0 : static_cast<std::uint32_t>(obs[0].cols());
  write_pod(f, obs_dim);
  write_pod(f, static_cast<std::uint32_t>(labels.empty() ? 0 : 1));
  for (const Mat& seq : obs)
    for (int t = 0; t < T; ++t)
      for (std::uint32_t p = 0; p < obs_dim; ++p) write_pod(f, static_cast<float>(seq(t, p)));
  if (!labels.empty())
    for (const auto& ys : labels)
      for (int y : ys) write_pod(f, static_cast<std::uint32_t>(y));
  if (!f) throw NumericError("write failure: " + path.string());
}

SequenceDataset SequenceDataset::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string());
  if (read_pod<std::uint32_t>(f) != kSequenceMagic) throw InputError("bad sequence file magic");
  if (read_pod<std::uint32_t>(f) != kFormatVersion) throw InputError("unsupported sequence file version");
  const std::uint64_t m = read_pod<std::uint64_t>(f);
  SequenceDataset out;
  out.T = static_cast<int>(read_pod<std::uint32_t>(f));
  out.k = static_cast<int>(read_pod<std::uint32_t>(f));
  out.emission = read_pod<std::uint32_t>(f) == 0 ? EmissionType::Finite : EmissionType::Gaussian;
  const std::uint32_t obs_dim = read_pod<std::uint32_t>(f);
  const bool has_labels = read_pod<std::uint32_t>(f) != 0;
  out.obs.resize(m);
  for (std::uint64_t s = 0; s < m; ++s) {
    Mat seq(out.T, obs_dim);
    for (int t = 0; t < out.T; ++t)
      for (std::uint32_t p = 0; p < obs_dim; ++p) seq(t, p) = read_pod<float>(f);
    out.obs[s] = std::move(seq);
  }
  if (has_labels) {
    out.labels.resize(m);
    for (std::uint64_t s = 0; s < m; ++s) {
      out.labels[s].resize(out.T);
      for (int t = 0; t < out.T; ++t)
        out.labels[s][t] = static_cast<int>(read_pod<std::uint32_t>(f));
    }
  }
  return out;
}

}  // namespace unrisk
