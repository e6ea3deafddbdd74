#include "segloc/descriptors/model.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "segloc/nn/checkpoint.hpp"

namespace segloc::descriptors {

namespace {

constexpr int kSemanticHidden = 32;

nn::Shape grid_shape() { return {1, prep::kGridCells[0], prep::kGridCells[1], prep::kGridCells[2]}; }

}  // namespace

Architecture Architecture::desk(int descriptor_dim) {
  Architecture a;
  a.conv_filters = {8, 16, 16};
  a.dense_width = 128;
  a.descriptor_dim = descriptor_dim;
  a.decoder_channels = 32;
  a.deconv_filters = {16, 8};
  return a;
}

Architecture Architecture::tiny(int descriptor_dim) {
  Architecture a;
  a.conv_filters = {2, 4, 4};
  a.dense_width = 32;
  a.descriptor_dim = descriptor_dim;
  a.decoder_channels = 4;
  a.deconv_filters = {4, 2};
  return a;
}

void pack_batch(const std::vector<const prep::VoxelizedSegment*>& segs, nn::Tensor& grids, nn::Tensor& scales) {
  const int n = static_cast<int>(segs.size());
  nn::Shape gs{n};
  for (int d : grid_shape()) gs.push_back(d);
  grids = nn::Tensor(gs);
  scales = nn::Tensor({n, 3});
  for (int i = 0; i < n; ++i) {
    const auto& occ = segs[i]->occupancy;
    double* g = grids.sample(i);
    for (std::size_t k = 0; k < occ.size(); ++k) g[k] = occ[k];
    const Point3 s = segs[i]->scale();
    for (int a = 0; a < 3; ++a) scales.sample(i)[a] = s[a];
  }
}

DescriptorModel::DescriptorModel(Provider provider, Architecture arch, int num_classes, std::uint64_t seed)
    : provider_(provider), arch_(arch), num_classes_(provider == Provider::autoencoder ? 0 : num_classes) {
  if (provider == Provider::eigen) throw std::invalid_argument("eigen features have no network model");
  build(seed);
}

void DescriptorModel::build(std::uint64_t seed) {
  const auto& f = arch_.conv_filters;
  encoder_.add<nn::Conv3d>(1, f[0]);
  encoder_.add<nn::BatchNorm>(f[0]);
  encoder_.add<nn::Relu>();
  encoder_.add<nn::MaxPool3d>();
  encoder_.add<nn::Conv3d>(f[0], f[1]);
  encoder_.add<nn::BatchNorm>(f[1]);
  encoder_.add<nn::Relu>();
  encoder_.add<nn::MaxPool3d>();
  encoder_.add<nn::Conv3d>(f[1], f[2]);
  encoder_.add<nn::BatchNorm>(f[2]);
  encoder_.add<nn::Relu>();
  encoder_.add<nn::Flatten>();
  concat_ = &encoder_.add<nn::ConcatScale>(3);
  const int flat = f[2] * (prep::kGridCells[0] / 4) * (prep::kGridCells[1] / 4) * (prep::kGridCells[2] / 4);
  encoder_.add<nn::Dense>(flat + 3, arch_.dense_width);
  encoder_.add<nn::Relu>();
  encoder_.add<nn::Dropout>(arch_.dropout);
  encoder_.add<nn::Dense>(arch_.dense_width, arch_.descriptor_dim);
  encoder_.add<nn::Relu>();
  if (encoder_.output_shape(grid_shape()) != nn::Shape{arch_.descriptor_dim})
    throw std::logic_error("encoder output shape mismatch");

  if (num_classes_ > 0) classifier_.add<nn::Dense>(arch_.descriptor_dim, num_classes_);

  const int c0 = arch_.decoder_channels;
  const int d0 = prep::kGridCells[0] / 8, h0 = prep::kGridCells[1] / 8, w0 = prep::kGridCells[2] / 8;
  decoder_.add<nn::Dense>(arch_.descriptor_dim, c0 * d0 * h0 * w0);
  decoder_.add<nn::Relu>();
  decoder_.add<nn::Reshape>(nn::Shape{c0, d0, h0, w0});
  decoder_.add<nn::Deconv3d>(c0, arch_.deconv_filters[0]);
  decoder_.add<nn::Relu>();
  decoder_.add<nn::Deconv3d>(arch_.deconv_filters[0], arch_.deconv_filters[1]);
  decoder_.add<nn::Relu>();
  decoder_.add<nn::Deconv3d>(arch_.deconv_filters[1], 1);
  decoder_.add<nn::Sigmoid>();
  if (decoder_.output_shape({arch_.descriptor_dim}) != grid_shape()) throw std::logic_error("decoder output shape mismatch");

  // Independent streams keep each head's initialisation unaffected by the others.
  std::mt19937_64 enc_rng(seed), cls_rng(seed + 1), dec_rng(seed + 2);
  encoder_.init(enc_rng);
  classifier_.init(cls_rng);
  decoder_.init(dec_rng);
}

void DescriptorModel::reset_semantic_head(std::uint64_t seed) {
  semantic_ = nn::Sequential();
  semantic_.add<nn::Dense>(arch_.descriptor_dim, kSemanticHidden);
  semantic_.add<nn::Relu>();
  semantic_.add<nn::Dense>(kSemanticHidden, kSemanticClasses);
  std::mt19937_64 rng(seed);
  semantic_.init(rng);
}

nn::Tensor DescriptorModel::encode(const nn::Tensor& grids, const nn::Tensor& scales, nn::Mode mode) {
  concat_->set_side(scales);
  return encoder_.forward(grids, mode);
}

std::vector<Descriptor> DescriptorModel::describe(const std::vector<prep::VoxelizedSegment>& segments,
                                                  std::size_t batch) {
  std::vector<Descriptor> out;
  out.reserve(segments.size());
  for (std::size_t start = 0; start < segments.size(); start += batch) {
    const std::size_t end = std::min(segments.size(), start + batch);
    std::vector<const prep::VoxelizedSegment*> ptrs;
    for (std::size_t i = start; i < end; ++i) {
      if (segments[i].occupied() == 0) throw std::invalid_argument("describe: empty occupancy grid");
      ptrs.push_back(&segments[i]);
    }
    nn::Tensor grids, scales;
    pack_batch(ptrs, grids, scales);
    const nn::Tensor d = encode(grids, scales, nn::Mode::eval);
    for (std::size_t i = start; i < end; ++i) {
      const auto& s = segments[i];
      Descriptor desc;
      const double* row = d.sample(static_cast<int>(i - start));
      desc.values.assign(row, row + arch_.descriptor_dim);
      desc.provider = provider_;
      desc.voxel_sides = s.voxel_sides;
      desc.centroid = s.centroid;
      desc.angle = s.angle;
      desc.segment_id = s.segment_id;
      desc.observation_index = s.observation_index;
      out.push_back(std::move(desc));
    }
  }
  return out;
}

Descriptor DescriptorModel::describe(const prep::VoxelizedSegment& segment) { return describe(std::vector{segment}).front(); }

Reconstruction DescriptorModel::reconstruct(const Descriptor& d, double threshold) {
  if (d.provider == Provider::eigen) throw std::invalid_argument("reconstruct: eigen descriptors cannot be decoded");
  if (static_cast<int>(d.values.size()) != arch_.descriptor_dim)
    throw std::invalid_argument("reconstruct: descriptor dimension does not match the model");
  const nn::Tensor out = decoder_.forward(nn::Tensor({1, arch_.descriptor_dim}, d.values), nn::Mode::eval);
  Reconstruction r;
  r.probabilities = out.data;
  prep::VoxelizedSegment meta;
  meta.voxel_sides = d.voxel_sides;
  meta.centroid = d.centroid;
  meta.angle = d.angle;
  r.points = prep::devoxelize(meta, r.probabilities, threshold);
  return r;
}

std::optional<SemanticClass> DescriptorModel::classify_semantic(const Descriptor& d) {
  if (!has_semantic_head()) return std::nullopt;
  if (static_cast<int>(d.values.size()) != arch_.descriptor_dim)
    throw std::invalid_argument("classify_semantic: descriptor dimension does not match the model");
  const nn::Tensor logits = semantic_.forward(nn::Tensor({1, arch_.descriptor_dim}, d.values), nn::Mode::eval);
  return static_cast<SemanticClass>(std::max_element(logits.data.begin(), logits.data.end()) - logits.data.begin());
}

std::uint64_t DescriptorModel::encoder_checksum() {
  std::uint64_t h = 1469598103934665603ULL;
  for (const nn::Param* p : encoder_.params())
    for (double v : p->value) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof v);
      for (unsigned char b : bytes) h = (h ^ b) * 1099511628211ULL;
    }
  return h;
}

void DescriptorModel::save(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json j;
  j["provider"] = to_string(provider_);
  j["num_classes"] = num_classes_;
  j["architecture"] = {{"conv_filters", arch_.conv_filters},
                       {"dense_width", arch_.dense_width},
                       {"descriptor_dim", arch_.descriptor_dim},
                       {"decoder_channels", arch_.decoder_channels},
                       {"deconv_filters", arch_.deconv_filters},
                       {"dropout", arch_.dropout}};
  j["semantic_head"] = has_semantic_head();
  std::ofstream(fs::path(dir) / "model.json") << j.dump(2) << "\n";
  nn::save_checkpoint((fs::path(dir) / "encoder.smnn").string(), encoder_);
  if (has_classifier()) nn::save_checkpoint((fs::path(dir) / "classifier.smnn").string(), classifier_);
  nn::save_checkpoint((fs::path(dir) / "decoder.smnn").string(), decoder_);
  if (has_semantic_head()) nn::save_checkpoint((fs::path(dir) / "semantic.smnn").string(), semantic_);
}

DescriptorModel DescriptorModel::load(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "model.json");
  if (!in) throw std::runtime_error("model: cannot open " + (fs::path(dir) / "model.json").string());
  const nlohmann::json j = nlohmann::json::parse(in);
  Architecture a;
  const auto& ja = j.at("architecture");
  a.conv_filters = ja.at("conv_filters").get<std::array<int, 3>>();
  a.dense_width = ja.at("dense_width").get<int>();
  a.descriptor_dim = ja.at("descriptor_dim").get<int>();
  a.decoder_channels = ja.at("decoder_channels").get<int>();
  a.deconv_filters = ja.at("deconv_filters").get<std::array<int, 2>>();
  a.dropout = ja.at("dropout").get<double>();
  DescriptorModel m(provider_from_string(j.at("provider").get<std::string>()), a, j.at("num_classes").get<int>(), 0);
  nn::load_checkpoint((fs::path(dir) / "encoder.smnn").string(), m.encoder_);
  if (m.has_classifier()) nn::load_checkpoint((fs::path(dir) / "classifier.smnn").string(), m.classifier_);
  nn::load_checkpoint((fs::path(dir) / "decoder.smnn").string(), m.decoder_);
  if (j.value("semantic_head", false)) {
    m.reset_semantic_head(0);
    nn::load_checkpoint((fs::path(dir) / "semantic.smnn").string(), m.semantic_);
  }
  return m;
}

}  // namespace segloc::descriptors

namespace segloc::descriptors {

DescriptorModel DescriptorModel::clone() {
  DescriptorModel m(provider_, arch_, num_classes_, 0);
  if (has_semantic_head()) m.reset_semantic_head(0);
  auto copy = [](nn::Sequential& from, nn::Sequential& to) {
    const auto a = from.params();
    const auto b = to.params();
    for (std::size_t i = 0; i < a.size(); ++i) b[i]->value = a[i]->value;
  };
  copy(encoder_, m.encoder_);
  copy(classifier_, m.classifier_);
  copy(decoder_, m.decoder_);
  copy(semantic_, m.semantic_);
  return m;
}

}  // namespace segloc::descriptors
