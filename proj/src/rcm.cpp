#include "hcnet/rcm.hpp"

#include "hcnet/ops.hpp"

namespace hcnet {

namespace {
void check_xq(const Tensor& x, const Tensor& q, const char* what) {
  if (x.ndim() != 3) throw ShapeError(std::string(what) + ": X must be C x H x W");
  if (q.ndim() != 3 || q.dim(1) != x.dim(1) || q.dim(2) != x.dim(2))
    throw ShapeError(std::string(what) + ": Q must be N x H x W matching X");
}
}  // namespace

Tensor region_pool(const Tensor& x, const Tensor& q, double eps) {
  check_xq(x, q, "region_pool");
  const size_t c = x.dim(0), n = q.dim(0), hw = x.dim(1) * x.dim(2);
  const Tensor xf = x.reshaped({c, hw});
  const Tensor qf = q.reshaped({n, hw});
  Tensor r = matmul(xf, transpose2d(qf));  // C x N
  for (size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (size_t k = 0; k < hw; ++k) s += qf.at(j, k);
    const double inv = 1.0 / (s + eps);
    for (size_t ci = 0; ci < c; ++ci) r.at(ci, j) *= inv;
  }
  return r;
}

Tensor region_unpool(const Tensor& r, const Tensor& q) {
  if (r.ndim() != 2) throw ShapeError("region_unpool: R must be C x N");
  if (q.ndim() != 3 || q.dim(0) != r.dim(1))
    throw ShapeError("region_unpool: Q must be N x H x W with N matching R");
  const size_t c = r.dim(0), n = r.dim(1);
  const size_t h = q.dim(1), w = q.dim(2);
  const Tensor qf = q.reshaped({n, h * w});
  return matmul(r, qf).reshaped({c, h, w});
}

RcmForwardResult rcm_forward(const Tensor& x, const Tensor& q,
                             const PiamParams& params, double eps_pool,
                             double eps_nra) {
  check_xq(x, q, "rcm_forward");
  params.validate(x.dim(0));
  const size_t c = x.dim(0), n = q.dim(0), hw = x.dim(1) * x.dim(2);

  RcmForwardResult res;
  RcmCache& cc = res.cache;
  cc.x = x;
  cc.q = q;
  cc.eps_pool = eps_pool;

  const Tensor xf = x.reshaped({c, hw});
  const Tensor qf = q.reshaped({n, hw});
  cc.pooled_raw = matmul(xf, transpose2d(qf));
  cc.inv_denom.resize(n);
  cc.r = cc.pooled_raw;
  for (size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (size_t k = 0; k < hw; ++k) s += qf.at(j, k);
    cc.inv_denom[j] = 1.0 / (s + eps_pool);
    for (size_t ci = 0; ci < c; ++ci) cc.r.at(ci, j) *= cc.inv_denom[j];
  }

  PiamForwardResult pr = piam_forward(cc.r, params, eps_nra);
  cc.r_prime = pr.out;
  cc.piam = std::move(pr.cache);

  res.out = matmul(cc.r_prime, qf).reshaped(x.shape());
  return res;
}

RcmGrads rcm_backward(const RcmCache& cache, const PiamParams& params,
                      const Tensor& d_out) {
  const Tensor& x = cache.x;
  const Tensor& q = cache.q;
  if (!d_out.same_shape(x)) throw ShapeError("rcm_backward: d_out shape");
  const size_t c = x.dim(0), n = q.dim(0), hw = x.dim(1) * x.dim(2);

  const Tensor xf = x.reshaped({c, hw});
  const Tensor qf = q.reshaped({n, hw});
  const Tensor d_x2 = d_out.reshaped({c, hw});

  // unpool: X'' = R' * Qf
  const Tensor d_r_prime = matmul(d_x2, transpose2d(qf));
  Tensor d_qf = matmul(transpose2d(cache.r_prime), d_x2);

  PiamGrads pg = piam_backward(cache.piam, params, d_r_prime);

  // pool: R[:,j] = M[:,j] * inv_j, inv_j = 1/(sum_k Qf[j,k] + eps)
  Tensor d_m(cache.pooled_raw.shape());
  for (size_t j = 0; j < n; ++j) {
    double dot = 0.0;
    for (size_t ci = 0; ci < c; ++ci) {
      d_m.at(ci, j) = pg.d_b.at(ci, j) * cache.inv_denom[j];
      dot += pg.d_b.at(ci, j) * cache.pooled_raw.at(ci, j);
    }
    const double d_s = -cache.inv_denom[j] * cache.inv_denom[j] * dot;
    for (size_t k = 0; k < hw; ++k) d_qf.at(j, k) += d_s;
  }
  const Tensor d_xf = matmul(d_m, qf);
  d_qf = add(d_qf, matmul(transpose2d(d_m), xf));

  RcmGrads g;
  g.d_x = d_xf.reshaped(x.shape());
  g.d_q = d_qf.reshaped(q.shape());
  g.d_w_o = std::move(pg.d_w_o);
  g.d_w_p = std::move(pg.d_w_p);
  g.d_alpha = pg.d_alpha;
  return g;
}

}  // namespace hcnet
