#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "hcnet/tensor.hpp"

namespace hcnet {

struct ConfusionCounts {
  int num_classes = 0;
  std::vector<uint64_t> tp, fp, fn, tn;  // one-vs-rest per class
  std::vector<uint64_t> matrix;          // n x n, row = gt, col = pred
  uint64_t valid_pixels = 0;

  uint64_t mat(int gt, int pred) const {
    return matrix[static_cast<size_t>(gt) * num_classes + pred];
  }
};

ConfusionCounts confusion(const Tensor& pred, const Tensor& gt, int n,
                          std::optional<int> ignore_label = std::nullopt);

struct IouResult {
  std::vector<double> per_class;  // -1 for classes with empty denominator
  double miou = 0.0;
};

IouResult iou_per_class(const ConfusionCounts& c);

struct F1Result {
  std::vector<double> per_class;  // -1 for classes with empty denominator
  double oa = 0.0;                // diagonal / valid pixels
};

F1Result f1_oa(const ConfusionCounts& c);

enum class SiouMatch { components, classmap };

struct SIoURecord {
  uint32_t instance_id = 0;
  int class_id = 0;
  uint64_t area = 0;
  double s_iou = 0.0;
  int bucket = 0;  // 0: [0,2500), 1: [2500,62500), 2: [62500,inf)
};

struct SIoUReport {
  std::vector<SIoURecord> records;  // ordered by instance id
  double bucket_mean[3] = {0, 0, 0};
  size_t bucket_count[3] = {0, 0, 0};
  double overall = 0.0;
};

int siou_bucket(uint64_t area);

// For each instance (pixel set S of class c): the matched prediction mask
// is the union of connected components of {pixels predicted c} that
// intersect S (components mode) or the full class map (classmap mode);
// s_iou = |S n P| / |S u P|.
SIoUReport s_iou(const Tensor& pred, const Tensor& instances,
                 const std::map<uint32_t, int>& instance_class,
                 int connectivity = 4,
                 SiouMatch match = SiouMatch::components);

// Connected-component labeling of {pred == cls}; labels 1..n_components,
// 0 elsewhere.
std::vector<uint32_t> connected_components(const Tensor& pred, int cls,
                                           int connectivity,
                                           uint32_t* n_components);

}  // namespace hcnet
