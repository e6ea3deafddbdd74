#include "segloc/descriptors/descriptor.hpp"

#include <cmath>
#include <stdexcept>

namespace segloc::descriptors {

std::string to_string(Provider p) {
  switch (p) {
    case Provider::segmap: return "segmap";
    case Provider::autoencoder: return "autoencoder";
    case Provider::eigen: return "eigen";
  }
  return "unknown";
}

Provider provider_from_string(const std::string& s) {
  if (s == "segmap") return Provider::segmap;
  if (s == "autoencoder") return Provider::autoencoder;
  if (s == "eigen") return Provider::eigen;
  throw std::invalid_argument("unknown descriptor provider '" + s + "'");
}

std::string to_string(SemanticClass c) {
  switch (c) {
    case SemanticClass::vehicle: return "vehicle";
    case SemanticClass::building: return "building";
    case SemanticClass::other: return "other";
  }
  return "unknown";
}

SemanticClass semantic_from_string(const std::string& s) {
  if (s == "vehicle") return SemanticClass::vehicle;
  if (s == "building") return SemanticClass::building;
  if (s == "other") return SemanticClass::other;
  throw std::invalid_argument("unknown semantic class '" + s + "'");
}

double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("l2_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace segloc::descriptors
