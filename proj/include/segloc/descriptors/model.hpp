#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "segloc/descriptors/descriptor.hpp"
#include "segloc/nn/layers.hpp"
#include "segloc/prep/voxelize.hpp"

namespace segloc::descriptors {

/// Widths of the encoder / decoder stacks.
struct Architecture {
  std::array<int, 3> conv_filters{32, 64, 64};
  int dense_width = 512;
  int descriptor_dim = 64;
  int decoder_channels = 256;  // channels of the 4x4x2 volume after the decoder's dense layer
  std::array<int, 2> deconv_filters{64, 32};
  double dropout = 0.5;

  /// Narrow variant that trains in minutes on one CPU core.
  static Architecture desk(int descriptor_dim = 64);
  /// Very small variant for unit tests and gradient checks.
  static Architecture tiny(int descriptor_dim = 16);
};

struct Reconstruction {
  std::vector<double> probabilities;  // 32x32x16 sigmoid outputs
  PointCloud points;                  // cells >= threshold, original frame
};

/// Encoder (descriptor extractor) plus optional classifier, decoder and semantic heads.
class DescriptorModel {
 public:
  /// `num_classes` 0 builds no classifier; the autoencoder provider never has one.
  DescriptorModel(Provider provider, Architecture arch, int num_classes, std::uint64_t seed);

  Provider provider() const { return provider_; }
  const Architecture& architecture() const { return arch_; }
  int descriptor_dim() const { return arch_.descriptor_dim; }
  int num_classes() const { return num_classes_; }
  bool has_classifier() const { return num_classes_ > 0; }
  bool has_decoder() const { return true; }
  bool has_semantic_head() const { return semantic_.size() > 0; }

  nn::Sequential& encoder() { return encoder_; }
  nn::Sequential& classifier() { return classifier_; }
  nn::Sequential& decoder() { return decoder_; }
  nn::Sequential& semantic_head() { return semantic_; }
  /// Creates a fresh 3-class head on top of the descriptor.
  void reset_semantic_head(std::uint64_t seed);

  /// grids [N,1,32,32,16], scales [N,3].
  nn::Tensor encode(const nn::Tensor& grids, const nn::Tensor& scales, nn::Mode mode);

  /// Eval-mode descriptors; throws std::invalid_argument for an empty grid.
  std::vector<Descriptor> describe(const std::vector<prep::VoxelizedSegment>& segments, std::size_t batch = 32);
  Descriptor describe(const prep::VoxelizedSegment& segment);

  /// Throws std::invalid_argument for eigen descriptors or a dimension mismatch.
  Reconstruction reconstruct(const Descriptor& d, double threshold = 0.5);

  std::optional<SemanticClass> classify_semantic(const Descriptor& d);

  /// FNV-1a over the encoder's float64 parameters.
  std::uint64_t encoder_checksum();

  /// Writes model.json and one checkpoint per head into `dir`.
  void save(const std::string& dir);
  static DescriptorModel load(const std::string& dir);
  /// Independent copy with identical weights; forward caches are not shared.
  DescriptorModel clone();

 private:
  void build(std::uint64_t seed);

  Provider provider_;
  Architecture arch_;
  int num_classes_;
  nn::Sequential encoder_, classifier_, decoder_, semantic_;
  nn::ConcatScale* concat_ = nullptr;
};

/// Packs occupancy and scale vectors into network inputs.
void pack_batch(const std::vector<const prep::VoxelizedSegment*>& segs, nn::Tensor& grids, nn::Tensor& scales);

}  // namespace segloc::descriptors
