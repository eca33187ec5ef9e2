#pragma once

#include "unrisk/common.hpp"
#include "unrisk/views.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace unrisk {

/// Labeled multi-view sample set. Labels exist for oracle evaluation only;
/// estimation entry points accept the label-free ViewArrays projection, so a
/// call site has to strip labels explicitly before estimating.
struct MultiViewDataset {
  ViewArrays views;
  std::vector<int> labels;  // empty when unlabeled
  int k = 0;

  bool labeled() const { return !labels.empty(); }
  const ViewArrays& unlabeled() const { return views; }

  void save(const std::filesystem::path& path) const;
  static MultiViewDataset load(const std::filesystem::path& path);
};

struct GeneratorSpec {
  int k = 2;
  std::array<int, 3> dims = {1, 1, 1};
  Vec pi;                    // class prior on the simplex
  double mean_scale = 1.0;   // spread of the per-class per-view means
  double noise = 1.0;        // within-class standard deviation
};

/// y ~ pi, x_v | y ~ N(mu_{v,y}, noise^2 I) with seeded per-sample substreams.
MultiViewDataset gen_multiview(const GeneratorSpec& spec, std::size_t m, std::uint64_t seed);

/// The class-conditional view means the generator used (oracle access).
std::array<Mat, 3> generator_means(const GeneratorSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

struct ImageSet {
  int rows = 0, cols = 0;
  std::vector<Vec> images;  // row-major pixels in [0, 1]
  std::vector<int> labels;
};

/// Patchwork construction: per sample draw a class, draw three distinct images
/// of that class, and let every third pixel come from the respective image.
/// View v holds the pixels with flat index congruent to v mod 3.
MultiViewDataset compose_patchwork(const ImageSet& source, std::size_t m, std::uint64_t seed);

/// Inverse of the view split: interleaves three view vectors back into a flat
/// pixel array.
Vec interleave_views(const Views& views, int n_pixels);

enum class DimConvention { Divide, Multiply };

/// Radial dimming shift: pixel p is scaled by exp(-a * (||p - p0|| - 0.4))
/// under the Divide convention (dim-by-c means divide by c) or by
/// exp(+a * (||p - p0|| - 0.4)) under Multiply. Distances are normalized so the
/// farthest corner is at 1; the result is clipped to [0, max_intensity].
Vec apply_dimming(const Vec& image, int rows, int cols, double a,
                  DimConvention convention = DimConvention::Divide,
                  double max_intensity = 1.0);

ImageSet apply_dimming(const ImageSet& images, double a,
                       DimConvention convention = DimConvention::Divide);

/// Synthetic class-template images (seeded Gaussian bumps plus pixel noise);
/// stands in for real digit data at desk scale.
ImageSet synth_image_classes(int k, int per_class, int rows, int cols, std::uint64_t seed,
                             double pixel_noise = 0.15);

// ---------------------------------------------------------------------------
// IDX files
// ---------------------------------------------------------------------------

/// Reads an IDX image file (big-endian magic 0x00000803); pixels scaled to [0,1].
ImageSet load_idx_images(const std::filesystem::path& path);
/// Reads an IDX label file (big-endian magic 0x00000801).
std::vector<int> load_idx_labels(const std::filesystem::path& path);
/// Both files; image and label counts must match.
ImageSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

// ---------------------------------------------------------------------------
// HMM sequences
// ---------------------------------------------------------------------------

enum class EmissionType { Finite, Gaussian };

struct HmmGeneratorSpec {
  int k = 2;
  int T = 4;
  Mat transition;  // k x k row-stochastic
  Vec initial;     // length k
  EmissionType emission = EmissionType::Finite;
  Mat emission_table;   // k x n_obs row-stochastic (Finite)
  Mat emission_means;   // k x obs_dim (Gaussian)
  double emission_sigma = 1.0;
};

struct SequenceDataset {
  int T = 0;
  int k = 0;
  EmissionType emission = EmissionType::Finite;
  std::vector<Mat> obs;                 // per sequence: T x obs_dim
  std::vector<std::vector<int>> labels; // oracle only; may be empty

  std::size_t size() const { return obs.size(); }
  void save(const std::filesystem::path& path) const;
  static SequenceDataset load(const std::filesystem::path& path);
};

SequenceDataset gen_hmm_sequences(const HmmGeneratorSpec& spec, std::size_t m, std::uint64_t seed);

}  // namespace unrisk
