#include "hcnet/metrics.hpp"

#include <algorithm>
#include <deque>

namespace hcnet {

namespace {
int label_of(const Tensor& t, size_t pix) {
  return static_cast<int>(t[pix]);
}
}  // namespace

ConfusionCounts confusion(const Tensor& pred, const Tensor& gt, int n,
                          std::optional<int> ignore_label) {
  if (!pred.same_shape(gt))
    throw ShapeError("confusion: pred/gt shape mismatch");
  if (n < 1) throw ValueError("confusion: n must be >= 1");

  ConfusionCounts c;
  c.num_classes = n;
  c.tp.assign(n, 0);
  c.fp.assign(n, 0);
  c.fn.assign(n, 0);
  c.tn.assign(n, 0);
  c.matrix.assign(static_cast<size_t>(n) * n, 0);

  const size_t total = pred.numel();
  for (size_t p = 0; p < total; ++p) {
    const int g = label_of(gt, p);
    if (ignore_label && g == *ignore_label) continue;
    const int pr = label_of(pred, p);
    if (g < 0 || g >= n)
      throw ValueError("confusion: gt label out of range: " + std::to_string(g));
    if (pr < 0 || pr >= n)
      throw ValueError("confusion: pred label out of range: " +
                       std::to_string(pr));
    ++c.matrix[static_cast<size_t>(g) * n + pr];
    ++c.valid_pixels;
  }
  for (int cls = 0; cls < n; ++cls) {
    const uint64_t tp = c.mat(cls, cls);
    uint64_t row = 0, col = 0;
    for (int j = 0; j < n; ++j) {
      row += c.mat(cls, j);
      col += c.mat(j, cls);
    }
    c.tp[cls] = tp;
    c.fn[cls] = row - tp;
    c.fp[cls] = col - tp;
    c.tn[cls] = c.valid_pixels - row - col + tp;
  }
  return c;
}

IouResult iou_per_class(const ConfusionCounts& c) {
  IouResult r;
  r.per_class.assign(c.num_classes, -1.0);
  double acc = 0.0;
  size_t counted = 0;
  for (int cls = 0; cls < c.num_classes; ++cls) {
    const uint64_t denom = c.tp[cls] + c.fp[cls] + c.fn[cls];
    if (denom == 0) continue;
    r.per_class[cls] =
        static_cast<double>(c.tp[cls]) / static_cast<double>(denom);
    acc += r.per_class[cls];
    ++counted;
  }
  r.miou = counted ? acc / static_cast<double>(counted) : 0.0;
  return r;
}

F1Result f1_oa(const ConfusionCounts& c) {
  F1Result r;
  r.per_class.assign(c.num_classes, -1.0);
  for (int cls = 0; cls < c.num_classes; ++cls) {
    const uint64_t denom = 2 * c.tp[cls] + c.fp[cls] + c.fn[cls];
    if (denom == 0) continue;
    r.per_class[cls] =
        2.0 * static_cast<double>(c.tp[cls]) / static_cast<double>(denom);
  }
  uint64_t diag = 0;
  for (int cls = 0; cls < c.num_classes; ++cls) diag += c.mat(cls, cls);
  r.oa = c.valid_pixels
             ? static_cast<double>(diag) / static_cast<double>(c.valid_pixels)
             : 0.0;
  return r;
}

int siou_bucket(uint64_t area) {
  if (area < 2500) return 0;
  if (area < 62500) return 1;
  return 2;
}

std::vector<uint32_t> connected_components(const Tensor& pred, int cls,
                                           int connectivity,
                                           uint32_t* n_components) {
  if (pred.ndim() != 2) throw ShapeError("connected_components: 2-D required");
  if (connectivity != 4 && connectivity != 8)
    throw ValueError("connected_components: connectivity must be 4 or 8");
  const long h = static_cast<long>(pred.dim(0));
  const long w = static_cast<long>(pred.dim(1));
  std::vector<uint32_t> labels(static_cast<size_t>(h * w), 0);
  uint32_t next = 0;
  std::deque<long> queue;
  for (long start = 0; start < h * w; ++start) {
    if (labels[start] != 0 || label_of(pred, start) != cls) continue;
    ++next;
    labels[start] = next;
    queue.push_back(start);
    while (!queue.empty()) {
      const long p = queue.front();
      queue.pop_front();
      const long pi = p / w, pj = p % w;
      static const int d4[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
      static const int d8[8][2] = {{-1, 0}, {1, 0},  {0, -1}, {0, 1},
                                   {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
      const int nn = (connectivity == 4) ? 4 : 8;
      const int(*dd)[2] = (connectivity == 4) ? d4 : d8;
      for (int k = 0; k < nn; ++k) {
        const long ni = pi + dd[k][0], nj = pj + dd[k][1];
        if (ni < 0 || ni >= h || nj < 0 || nj >= w) continue;
        const long np = ni * w + nj;
        if (labels[np] != 0 || label_of(pred, np) != cls) continue;
        labels[np] = next;
        queue.push_back(np);
      }
    }
  }
  if (n_components) *n_components = next;
  return labels;
}

SIoUReport s_iou(const Tensor& pred, const Tensor& instances,
                 const std::map<uint32_t, int>& instance_class,
                 int connectivity, SiouMatch match) {
  if (!pred.same_shape(instances))
    throw ShapeError("s_iou: pred/instances shape mismatch");
  const size_t total = pred.numel();

  // instance id -> pixel list
  std::map<uint32_t, std::vector<size_t>> inst_pixels;
  for (size_t p = 0; p < total; ++p) {
    const uint32_t id = static_cast<uint32_t>(instances[p]);
    if (id == 0) continue;  // 0 = no instance
    inst_pixels[id].push_back(p);
  }

  // component labels per class, computed lazily
  std::map<int, std::vector<uint32_t>> class_components;

  SIoUReport rep;
  for (const auto& [id, cls] : instance_class) {
    auto it = inst_pixels.find(id);
    if (it == inst_pixels.end() || it->second.empty())
      throw ValueError("s_iou: instance " + std::to_string(id) +
                       " has zero pixels");
    const std::vector<size_t>& s_pix = it->second;

    uint64_t inter = 0, uni = 0;
    if (match == SiouMatch::classmap) {
      // P = all pixels predicted cls
      uint64_t p_size = 0;
      std::vector<uint8_t> in_s(total, 0);
      for (size_t p : s_pix) in_s[p] = 1;
      for (size_t p = 0; p < total; ++p) {
        const bool pp = label_of(pred, p) == cls;
        if (pp) ++p_size;
        if (pp && in_s[p]) ++inter;
      }
      uni = s_pix.size() + p_size - inter;
    } else {
      auto cit = class_components.find(cls);
      if (cit == class_components.end()) {
        cit = class_components
                  .emplace(cls, connected_components(pred, cls, connectivity,
                                                     nullptr))
                  .first;
      }
      const std::vector<uint32_t>& comp = cit->second;
      // components touching S
      std::vector<uint32_t> touched;
      for (size_t p : s_pix)
        if (comp[p] != 0) touched.push_back(comp[p]);
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

      std::vector<uint8_t> in_s(total, 0);
      for (size_t p : s_pix) in_s[p] = 1;
      uint64_t p_size = 0;
      for (size_t p = 0; p < total; ++p) {
        if (comp[p] == 0) continue;
        if (!std::binary_search(touched.begin(), touched.end(), comp[p]))
          continue;
        ++p_size;
        if (in_s[p]) ++inter;
      }
      uni = s_pix.size() + p_size - inter;
    }

    SIoURecord rec;
    rec.instance_id = id;
    rec.class_id = cls;
    rec.area = s_pix.size();
    rec.s_iou = uni ? static_cast<double>(inter) / static_cast<double>(uni)
                    : 0.0;
    rec.bucket = siou_bucket(rec.area);
    rep.records.push_back(rec);
  }

  double sums[3] = {0, 0, 0};
  double all = 0.0;
  for (const SIoURecord& r : rep.records) {
    sums[r.bucket] += r.s_iou;
    ++rep.bucket_count[r.bucket];
    all += r.s_iou;
  }
  for (int b = 0; b < 3; ++b)
    rep.bucket_mean[b] =
        rep.bucket_count[b] ? sums[b] / static_cast<double>(rep.bucket_count[b])
                            : 0.0;
  rep.overall = rep.records.empty()
                    ? 0.0
                    : all / static_cast<double>(rep.records.size());
  return rep;
}

}  // namespace hcnet
