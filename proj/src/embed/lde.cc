// Copyright 2026 The speakaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "speakaug/embed/lde.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "speakaug/common/error.h"

namespace speakaug::embed {

using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

struct LdeCache {
  int T, C, D;
  bool with_std;
  std::vector<double> r;      // [T, C, D] residuals
  std::vector<double> dist;   // [T, C]
  std::vector<double> w;      // [T, C]
  std::vector<double> z;      // [C] sum_t w + eps
  std::vector<double> e;      // [C, D]
  std::vector<double> var;    // [C, D]
  std::vector<double> sd;     // [C, D]
};

}  // namespace

Var lde_pool(Var x, Var mu, Var s, Pooling pooling) {
  if (!x.valid()) throw InvalidArgument("lde_pool: empty Var");
  Graph& g = *x.graph;
  const Tensor& X = x.value();
  const Tensor& M = mu.value();
  const Tensor& S = s.value();
  const int T = X.rank() == 2 ? X.rows() : 0;
  if (T == 0 || X.empty()) throw InvalidArgument("lde_pool: no frames");
  const int D = X.cols(), C = M.rows();
  if (M.rank() != 2 || M.cols() != D) {
    throw InvalidArgument("lde_pool: frames " + nn::shape_string(X.shape) + " vs means " +
                          nn::shape_string(M.shape));
  }
  if (static_cast<int>(S.size()) != C) {
    throw InvalidArgument("lde_pool: scales " + nn::shape_string(S.shape) + " for " +
                          std::to_string(C) + " components");
  }
  for (double v : S.values)
    if (!(v > 0)) throw InvalidArgument("lde_pool: scales must be positive");

  auto c = std::make_shared<LdeCache>();
  c->T = T, c->C = C, c->D = D;
  c->with_std = pooling == Pooling::kMeanStd;
  c->r.resize(static_cast<std::size_t>(T) * C * D);
  c->dist.resize(static_cast<std::size_t>(T) * C);
  c->w.resize(c->dist.size());
  c->z.assign(C, kLdeEps);
  c->e.assign(static_cast<std::size_t>(C) * D, 0.0);
  for (int t = 0; t < T; ++t) {
    double* a = &c->w[static_cast<std::size_t>(t) * C];
    for (int k = 0; k < C; ++k) {
      double* r = &c->r[(static_cast<std::size_t>(t) * C + k) * D];
      double d2 = 0;
      for (int d = 0; d < D; ++d) {
        r[d] = X.values[static_cast<std::size_t>(t) * D + d] - M.values[static_cast<std::size_t>(k) * D + d];
        d2 += r[d] * r[d];
      }
      c->dist[static_cast<std::size_t>(t) * C + k] = d2;
      a[k] = -S[k] * d2;
    }
    const double mx = *std::max_element(a, a + C);
    double sum = 0;
    for (int k = 0; k < C; ++k) sum += (a[k] = std::exp(a[k] - mx));
    for (int k = 0; k < C; ++k) a[k] /= sum;
  }
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < C; ++k) {
      const double w = c->w[static_cast<std::size_t>(t) * C + k];
      c->z[k] += w;
      const double* r = &c->r[(static_cast<std::size_t>(t) * C + k) * D];
      double* e = &c->e[static_cast<std::size_t>(k) * D];
      for (int d = 0; d < D; ++d) e[d] += w * r[d];
    }
  for (int k = 0; k < C; ++k)
    for (int d = 0; d < D; ++d) c->e[static_cast<std::size_t>(k) * D + d] /= c->z[k];

  const int width = (c->with_std ? 2 : 1) * C * D;
  Tensor y({1, width});
  std::copy(c->e.begin(), c->e.end(), y.values.begin());
  if (c->with_std) {
    c->var.assign(static_cast<std::size_t>(C) * D, 0.0);
    c->sd.resize(c->var.size());
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < C; ++k) {
        const double w = c->w[static_cast<std::size_t>(t) * C + k];
        const double* r = &c->r[(static_cast<std::size_t>(t) * C + k) * D];
        const double* e = &c->e[static_cast<std::size_t>(k) * D];
        double* v = &c->var[static_cast<std::size_t>(k) * D];
        for (int d = 0; d < D; ++d) v[d] += w * (r[d] - e[d]) * (r[d] - e[d]);
      }
    for (int k = 0; k < C; ++k)
      for (int d = 0; d < D; ++d) {
        const std::size_t q = static_cast<std::size_t>(k) * D + d;
        c->var[q] /= c->z[k];
        c->sd[q] = std::sqrt(c->var[q] + kLdeEps);
        y.values[static_cast<std::size_t>(C) * D + q] = c->sd[q];
      }
  }

  const int out = static_cast<int>(g.size());
  return g.emit("lde_pool", std::move(y), {x, mu, s},
                [xi = x.id, mi = mu.id, si = s.id, out, c](Graph& g) {
    const int T = c->T, C = c->C, D = c->D;
    const Tensor& dy = g.grad(out);
    const Tensor& S = g.value(si);
    std::vector<double> ge(dy.values.begin(), dy.values.begin() + static_cast<std::ptrdiff_t>(C) * D);
    std::vector<double> gv;
    if (c->with_std) {
      gv.resize(static_cast<std::size_t>(C) * D);
      for (std::size_t q = 0; q < gv.size(); ++q) {
        gv[q] = dy.values[static_cast<std::size_t>(C) * D + q] / (2.0 * c->sd[q]);
        // v depends on e through the eps in the normalizer.
        ge[q] += gv[q] * (-2.0 * kLdeEps * c->e[q] / c->z[q / D]);
      }
    }
    std::vector<double> gw(static_cast<std::size_t>(T) * C, 0.0);
    std::vector<double> gr(static_cast<std::size_t>(T) * C * D, 0.0);
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < C; ++k) {
        const std::size_t tk = static_cast<std::size_t>(t) * C + k;
        const double w = c->w[tk], z = c->z[k];
        const double* r = &c->r[tk * D];
        const double* e = &c->e[static_cast<std::size_t>(k) * D];
        double* grr = &gr[tk * D];
        double acc = 0;
        for (int d = 0; d < D; ++d) {
          const std::size_t q = static_cast<std::size_t>(k) * D + d;
          const double dev = r[d] - e[d];
          acc += ge[q] * dev / z;
          grr[d] = ge[q] * w / z;
          if (c->with_std) {
            acc += gv[q] * (dev * dev - c->var[q]) / z;
            grr[d] += gv[q] * 2.0 * w * dev / z;
          }
        }
        gw[tk] = acc;
      }
    // Softmax over components, then a_tc = -s_c * dist_tc.
    std::vector<double> gdist(gw.size());
    std::vector<double> gs(C, 0.0);
    for (int t = 0; t < T; ++t) {
      const std::size_t base = static_cast<std::size_t>(t) * C;
      double dot = 0;
      for (int k = 0; k < C; ++k) dot += c->w[base + k] * gw[base + k];
      for (int k = 0; k < C; ++k) {
        const double ga = c->w[base + k] * (gw[base + k] - dot);
        gs[k] -= ga * c->dist[base + k];
        gdist[base + k] = -S[k] * ga;
      }
    }
    const bool need_x = g.needs_grad(xi), need_m = g.needs_grad(mi);
    Tensor* gx = need_x ? &g.grad(xi) : nullptr;
    Tensor* gm = need_m ? &g.grad(mi) : nullptr;
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < C; ++k) {
        const std::size_t tk = static_cast<std::size_t>(t) * C + k;
        const double* r = &c->r[tk * D];
        const double* grr = &gr[tk * D];
        for (int d = 0; d < D; ++d) {
          const double total = grr[d] + 2.0 * gdist[tk] * r[d];
          if (gx) gx->values[static_cast<std::size_t>(t) * D + d] += total;
          if (gm) gm->values[static_cast<std::size_t>(k) * D + d] -= total;
        }
      }
    if (g.needs_grad(si)) {
      Tensor& gsv = g.grad(si);
      for (int k = 0; k < C; ++k) gsv[k] += gs[k];
    }
  });
}

Var angular_margin_logits(Var x, Var w, const std::vector<int>& labels, double lambda) {
  Graph& g = *x.graph;
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  const int n = X.rows(), dim = X.cols(), K = W.cols();
  if (W.rank() != 2 || W.rows() != dim) {
    throw InvalidArgument("angular_margin_logits: " + nn::shape_string(X.shape) + " vs " +
                          nn::shape_string(W.shape));
  }
  if (static_cast<int>(labels.size()) != n) throw InvalidArgument("angular_margin_logits: label count");
  if (lambda < 0) throw InvalidArgument("angular_margin_logits: lambda must be >= 0");
  auto wn = std::make_shared<std::vector<double>>(K);
  auto xn = std::make_shared<std::vector<double>>(n);
  for (int j = 0; j < K; ++j) {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += W.at(i, j) * W.at(i, j);
    (*wn)[j] = std::sqrt(s);
    if ((*wn)[j] == 0) throw NumericError("angular_margin_logits: zero weight column");
  }
  Tensor y({n, K});
  for (int r = 0; r < n; ++r) {
    if (labels[r] < 0 || labels[r] >= K) throw InvalidArgument("angular_margin_logits: label out of range");
    double s = 0;
    for (int i = 0; i < dim; ++i) s += X.at(r, i) * X.at(r, i);
    (*xn)[r] = std::sqrt(s);
    if ((*xn)[r] == 0) throw NumericError("angular_margin_logits: zero embedding");
    for (int j = 0; j < K; ++j) {
      double u = 0;
      for (int i = 0; i < dim; ++i) u += X.at(r, i) * W.at(i, j);
      u /= (*wn)[j];
      if (j != labels[r]) {
        y.at(r, j) = u;
      } else {
        const double cth = u / (*xn)[r];
        const double sgn = cth > 0 ? 1.0 : -1.0;
        const double k = cth > 0 ? 0.0 : 1.0;
        const double psi = sgn * (2 * cth * cth - 1) - 2 * k;
        y.at(r, j) = (lambda * u + (*xn)[r] * psi) / (1 + lambda);
      }
    }
  }
  const int out = static_cast<int>(g.size());
  return g.emit("angular_margin_logits", std::move(y), {x, w},
                [xi = x.id, wi = w.id, out, labels, lambda, wn, xn, n, dim, K](Graph& g) {
    const Tensor& dy = g.grad(out);
    const Tensor& X = g.value(xi);
    const Tensor& W = g.value(wi);
    // Gradients with respect to x and to the normalized columns.
    std::vector<double> gx(static_cast<std::size_t>(n) * dim, 0.0);
    std::vector<double> gwh(static_cast<std::size_t>(dim) * K, 0.0);
    for (int r = 0; r < n; ++r) {
      const double nx = (*xn)[r];
      for (int j = 0; j < K; ++j) {
        double gu = dy.at(r, j), gc = 0.0, gnx = 0.0;
        double u = 0;
        for (int i = 0; i < dim; ++i) u += X.at(r, i) * W.at(i, j);
        u /= (*wn)[j];
        if (j == labels[r]) {
          const double cth = u / nx;
          const double sgn = cth > 0 ? 1.0 : -1.0;
          const double k = cth > 0 ? 0.0 : 1.0;
          const double psi = sgn * (2 * cth * cth - 1) - 2 * k;
          const double dpsi = sgn * 4 * cth;
          const double gl = dy.at(r, j) / (1 + lambda);
          gu = gl * lambda;
          gnx = gl * psi;
          gc = gl * nx * dpsi;
        }
        // c = u / |x|: dc/du = 1/|x|, dc/d|x| = -u/|x|^2.
        gu += gc / nx;
        gnx += -gc * u / (nx * nx);
        for (int i = 0; i < dim; ++i) {
          const double wh = W.at(i, j) / (*wn)[j];
          gx[static_cast<std::size_t>(r) * dim + i] += gu * wh + gnx * X.at(r, i) / nx;
          gwh[static_cast<std::size_t>(i) * K + j] += gu * X.at(r, i);
        }
      }
    }
    if (g.needs_grad(xi)) {
      Tensor& d = g.grad(xi);
      for (std::size_t q = 0; q < gx.size(); ++q) d[q] += gx[q];
    }
    if (g.needs_grad(wi)) {
      Tensor& d = g.grad(wi);
      for (int j = 0; j < K; ++j) {
        double dot = 0;
        for (int i = 0; i < dim; ++i) dot += gwh[static_cast<std::size_t>(i) * K + j] * W.at(i, j) / (*wn)[j];
        for (int i = 0; i < dim; ++i) {
          const double wh = W.at(i, j) / (*wn)[j];
          d.at(i, j) += (gwh[static_cast<std::size_t>(i) * K + j] - dot * wh) / (*wn)[j];
        }
      }
    }
  });
}

}  // namespace speakaug::embed
