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

#include "speakaug/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "speakaug/common/error.h"

namespace speakaug::nn {
namespace {

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const Shape& b) {
  throw InvalidArgument(op + ": incompatible shapes " + shape_string(a) + " and " +
                        shape_string(b));
}

int next_id(Var v) { return static_cast<int>(v.graph->size()); }

Graph& graph_of(Var v) {
  if (!v.valid()) throw InvalidArgument("operation on an empty Var");
  return *v.graph;
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Elementwise unary op with derivative expressed through input x and output y.
template <typename F, typename D>
Var unary(const char* name, Var a, F f, D dfdx) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const int out = next_id(a);
  return g.emit(name, std::move(y), {a}, [a = a.id, out, dfdx](Graph& g) {
    const Tensor& x = g.value(a);
    const Tensor& y = g.value(out);
    const Tensor& dy = g.grad(out);
    Tensor& dx = g.grad(a);
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] += dy[i] * dfdx(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const int n = A.rows(), k = A.cols(), m = B.cols();
  if (B.rank() != 2 || B.rows() != k) shape_error("matmul", A.shape, B.shape);
  Tensor y({n, m});
  for (int r = 0; r < n; ++r) {
    double* yr = &y.values[static_cast<std::size_t>(r) * m];
    for (int i = 0; i < k; ++i) {
      const double ai = A.values[static_cast<std::size_t>(r) * k + i];
      const double* bi = &B.values[static_cast<std::size_t>(i) * m];
      for (int j = 0; j < m; ++j) yr[j] += ai * bi[j];
    }
  }
  const int out = next_id(a);
  return g.emit("matmul", std::move(y), {a, b}, [a = a.id, b = b.id, out, n, k, m](Graph& g) {
    const Tensor& dy = g.grad(out);
    if (g.needs_grad(a)) {
      const Tensor& B = g.value(b);
      Tensor& da = g.grad(a);
      for (int r = 0; r < n; ++r)
        for (int i = 0; i < k; ++i) {
          double acc = 0;
          const double* bi = &B.values[static_cast<std::size_t>(i) * m];
          const double* dyr = &dy.values[static_cast<std::size_t>(r) * m];
          for (int j = 0; j < m; ++j) acc += dyr[j] * bi[j];
          da.values[static_cast<std::size_t>(r) * k + i] += acc;
        }
    }
    if (g.needs_grad(b)) {
      const Tensor& A = g.value(a);
      Tensor& db = g.grad(b);
      for (int r = 0; r < n; ++r)
        for (int i = 0; i < k; ++i) {
          const double ai = A.values[static_cast<std::size_t>(r) * k + i];
          if (ai == 0.0) continue;
          double* dbi = &db.values[static_cast<std::size_t>(i) * m];
          const double* dyr = &dy.values[static_cast<std::size_t>(r) * m];
          for (int j = 0; j < m; ++j) dbi[j] += ai * dyr[j];
        }
    }
  });
}

Var add_row(Var a, Var rowv) {
  Graph& g = graph_of(a);
  const Tensor& A = a.value();
  const Tensor& R = rowv.value();
  const int n = A.rows(), m = A.cols();
  if (static_cast<int>(R.size()) != m) shape_error("add_row", A.shape, R.shape);
  Tensor y = A;
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < m; ++j) y.values[static_cast<std::size_t>(r) * m + j] += R[j];
  const int out = next_id(a);
  return g.emit("add_row", std::move(y), {a, rowv}, [a = a.id, b = rowv.id, out, n, m](Graph& g) {
    const Tensor& dy = g.grad(out);
    if (g.needs_grad(a)) {
      Tensor& da = g.grad(a);
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
    }
    if (g.needs_grad(b)) {
      Tensor& db = g.grad(b);
      for (int r = 0; r < n; ++r)
        for (int j = 0; j < m; ++j) db[j] += dy.values[static_cast<std::size_t>(r) * m + j];
    }
  });
}

Var linear(Var x, Var w, Var b) { return add_row(matmul(x, w), b); }

Var add(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape != B.shape) shape_error("add", A.shape, B.shape);
  Tensor y = A;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += B[i];
  const int out = next_id(a);
  return g.emit("add", std::move(y), {a, b}, [a = a.id, b = b.id, out](Graph& g) {
    const Tensor& dy = g.grad(out);
    for (int id : {a, b}) {
      if (!g.needs_grad(id)) continue;
      Tensor& d = g.grad(id);
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i];
    }
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape != B.shape) shape_error("sub", A.shape, B.shape);
  Tensor y = A;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= B[i];
  const int out = next_id(a);
  return g.emit("sub", std::move(y), {a, b}, [a = a.id, b = b.id, out](Graph& g) {
    const Tensor& dy = g.grad(out);
    if (g.needs_grad(a)) {
      Tensor& d = g.grad(a);
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i];
    }
    if (g.needs_grad(b)) {
      Tensor& d = g.grad(b);
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] -= dy[i];
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape != B.shape) shape_error("mul", A.shape, B.shape);
  Tensor y = A;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= B[i];
  const int out = next_id(a);
  return g.emit("mul", std::move(y), {a, b}, [a = a.id, b = b.id, out](Graph& g) {
    const Tensor& dy = g.grad(out);
    if (g.needs_grad(a)) {
      const Tensor& B = g.value(b);
      Tensor& d = g.grad(a);
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i] * B[i];
    }
    if (g.needs_grad(b)) {
      const Tensor& A = g.value(a);
      Tensor& d = g.grad(b);
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i] * A[i];
    }
  });
}

Var scale(Var a, double s) {
  return unary("scale", a, [s](double x) { return s * x; },
               [s](double, double) { return s; });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary("sigmoid", a, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  Graph& g = graph_of(a);
  for (double x : a.value().values) g.note_kink(x > 0);
  return unary("relu", a, [](double x) { return x > 0 ? x : 0.0; },
               [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var softplus(Var a) {
  return unary("softplus", a,
               [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
               [](double x, double) { return sigmoid_value(x); });
}

Var dropout(Var a, double p) {
  Graph& g = graph_of(a);
  if (!g.training() || p <= 0.0) return a;
  if (p >= 1.0 || g.rng() == nullptr) throw InvalidArgument("dropout needs p < 1 and an rng");
  const Tensor& x = a.value();
  auto mask = std::make_shared<std::vector<double>>(x.size());
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    (*mask)[i] = g.rng()->uniform() < p ? 0.0 : 1.0 / (1.0 - p);
    y[i] = x[i] * (*mask)[i];
  }
  const int out = next_id(a);
  return g.emit("dropout", std::move(y), {a}, [a = a.id, out, mask](Graph& g) {
    const Tensor& dy = g.grad(out);
    Tensor& dx = g.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (*mask)[i];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidArgument("concat_cols: no inputs");
  Graph& g = graph_of(parts[0]);
  const int n = parts[0].value().rows();
  std::vector<int> widths;
  int total = 0;
  for (Var p : parts) {
    if (p.value().rows() != n) shape_error("concat_cols", parts[0].shape(), p.shape());
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Tensor y({n, total});
  int offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& P = parts[k].value();
    for (int r = 0; r < n; ++r)
      std::copy_n(&P.values[static_cast<std::size_t>(r) * widths[k]], widths[k],
                  &y.values[static_cast<std::size_t>(r) * total + offset]);
    offset += widths[k];
  }
  std::vector<int> ids;
  for (Var p : parts) ids.push_back(p.id);
  const int out = next_id(parts[0]);
  return g.emit("concat_cols", std::move(y), parts, [ids, widths, out, n, total](Graph& g) {
    const Tensor& dy = g.grad(out);
    int offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (g.needs_grad(ids[k])) {
        Tensor& d = g.grad(ids[k]);
        for (int r = 0; r < n; ++r)
          for (int j = 0; j < widths[k]; ++j)
            d.values[static_cast<std::size_t>(r) * widths[k] + j] +=
                dy.values[static_cast<std::size_t>(r) * total + offset + j];
      }
      offset += widths[k];
    }
  });
}

Var slice_cols(Var a, int begin, int len) {
  Graph& g = graph_of(a);
  const Tensor& A = a.value();
  const int n = A.rows(), m = A.cols();
  if (begin < 0 || len < 0 || begin + len > m) {
    throw InvalidArgument("slice_cols: range [" + std::to_string(begin) + ", " +
                          std::to_string(begin + len) + ") outside " + shape_string(A.shape));
  }
  Tensor y({n, len});
  for (int r = 0; r < n; ++r)
    std::copy_n(&A.values[static_cast<std::size_t>(r) * m + begin], len,
                &y.values[static_cast<std::size_t>(r) * len]);
  const int out = next_id(a);
  return g.emit("slice_cols", std::move(y), {a}, [a = a.id, out, n, m, begin, len](Graph& g) {
    const Tensor& dy = g.grad(out);
    Tensor& d = g.grad(a);
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < len; ++j)
        d.values[static_cast<std::size_t>(r) * m + begin + j] +=
            dy.values[static_cast<std::size_t>(r) * len + j];
  });
}

Var row(Var a, int r) {
  Graph& g = graph_of(a);
  const Tensor& A = a.value();
  const int m = A.cols();
  if (r < 0 || r >= A.rows()) {
    throw InvalidArgument("row " + std::to_string(r) + " outside " + shape_string(A.shape));
  }
  Tensor y({1, m});
  std::copy_n(&A.values[static_cast<std::size_t>(r) * m], m, y.values.begin());
  const int out = next_id(a);
  return g.emit("row", std::move(y), {a}, [a = a.id, out, r, m](Graph& g) {
    const Tensor& dy = g.grad(out);
    Tensor& d = g.grad(a);
    for (int j = 0; j < m; ++j) d.values[static_cast<std::size_t>(r) * m + j] += dy[j];
  });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw InvalidArgument("stack_rows: no inputs");
  Graph& g = graph_of(rows[0]);
  const int m = static_cast<int>(rows[0].value().size());
  const int n = static_cast<int>(rows.size());
  Tensor y({n, m});
  std::vector<int> ids;
  for (int r = 0; r < n; ++r) {
    const Tensor& R = rows[r].value();
    if (static_cast<int>(R.size()) != m) shape_error("stack_rows", rows[0].shape(), R.shape);
    std::copy(R.values.begin(), R.values.end(), &y.values[static_cast<std::size_t>(r) * m]);
    ids.push_back(rows[r].id);
  }
  const int out = next_id(rows[0]);
  return g.emit("stack_rows", std::move(y), rows, [ids, out, m](Graph& g) {
    const Tensor& dy = g.grad(out);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (!g.needs_grad(ids[r])) continue;
      Tensor& d = g.grad(ids[r]);
      for (int j = 0; j < m; ++j) d[j] += dy.values[r * m + j];
    }
  });
}

Var broadcast_rows(Var rowv, int n) {
  Graph& g = graph_of(rowv);
  const Tensor& R = rowv.value();
  const int m = static_cast<int>(R.size());
  Tensor y({n, m});
  for (int r = 0; r < n; ++r) std::copy(R.values.begin(), R.values.end(), &y.values[static_cast<std::size_t>(r) * m]);
  const int out = next_id(rowv);
  return g.emit("broadcast_rows", std::move(y), {rowv}, [a = rowv.id, out, n, m](Graph& g) {
    const Tensor& dy = g.grad(out);
    Tensor& d = g.grad(a);
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < m; ++j) d[j] += dy.values[static_cast<std::size_t>(r) * m + j];
  });
}

Var reshape(Var a, Shape shape) {
  Graph& g = graph_of(a);
  const Tensor& A = a.value();
  if (shape_size(shape) != A.size()) shape_error("reshape", A.shape, shape);
  Tensor y(std::move(shape), A.values);
  const int out = next_id(a);
  return g.emit("reshape", std::move(y), {a}, [a = a.id, out](Graph& g) {
    const Tensor& dy = g.grad(out);
    Tensor& d = g.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i];
  });
}

Var gather_rows(Var table, const std::vector<int>& ids) {
  Graph& g = graph_of(table);
  const Tensor& T = table.value();
  const int v = T.rows(), e = T.cols();
  Tensor y({static_cast<int>(ids.size()), e});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= v) {
      throw InvalidArgument("gather_rows: id " + std::to_string(ids[r]) +
                            " outside table of " + std::to_string(v) + " rows");
    }
    std::copy_n(&T.values[static_cast<std::size_t>(ids[r]) * e], e, &y.values[r * e]);
  }
  const int out = next_id(table);
  return g.emit("gather_rows", std::move(y), {table}, [t = table.id, out, ids, e](Graph& g) {
    const Tensor& dy = g.grad(out);
    Tensor& d = g.grad(t);
    for (std::size_t r = 0; r < ids.size(); ++r)
      for (int j = 0; j < e; ++j) d.values[static_cast<std::size_t>(ids[r]) * e + j] += dy.values[r * e + j];
  });
}

Var softmax_rows(Var a) {
  Graph& g = graph_of(a);
  const Tensor& A = a.value();
  const int n = A.rows(), m = A.cols();
  Tensor y(A.shape);
  for (int r = 0; r < n; ++r) {
    const double* x = &A.values[static_cast<std::size_t>(r) * m];
    double* o = &y.values[static_cast<std::size_t>(r) * m];
    const double mx = *std::max_element(x, x + m);
    double z = 0;
    for (int j = 0; j < m; ++j) z += (o[j] = std::exp(x[j] - mx));
    for (int j = 0; j < m; ++j) o[j] /= z;
  }
  const int out = next_id(a);
  return g.emit("softmax_rows", std::move(y), {a}, [a = a.id, out, n, m](Graph& g) {
    const Tensor& y = g.value(out);
    const Tensor& dy = g.grad(out);
    Tensor& dx = g.grad(a);
    for (int r = 0; r < n; ++r) {
      const std::size_t base = static_cast<std::size_t>(r) * m;
      double dot = 0;
      for (int j = 0; j < m; ++j) dot += dy.values[base + j] * y.values[base + j];
      for (int j = 0; j < m; ++j) dx.values[base + j] += y.values[base + j] * (dy.values[base + j] - dot);
    }
  });
}

Var conv1d(Var x, Var kernels, Var bias) {
  Graph& g = graph_of(x);
  const Tensor& X = x.value();
  const Tensor& K = kernels.value();
  if (K.rank() != 3) throw InvalidArgument("conv1d: kernels must be [k, C_in, C_out], got " + shape_string(K.shape));
  const int k = K.shape[0], cin = K.shape[1], cout = K.shape[2];
  if (k % 2 == 0) throw InvalidArgument("conv1d: kernel width must be odd, got " + std::to_string(k));
  if (X.cols() != cin) shape_error("conv1d", X.shape, K.shape);
  if (bias.valid() && static_cast<int>(bias.value().size()) != cout) shape_error("conv1d bias", K.shape, bias.shape());
  const int T = X.rows(), pad = k / 2;
  Tensor y({T, cout});
  if (bias.valid()) {
    const Tensor& B = bias.value();
    for (int t = 0; t < T; ++t) std::copy(B.values.begin(), B.values.end(), &y.values[static_cast<std::size_t>(t) * cout]);
  }
  for (int t = 0; t < T; ++t) {
    double* yt = &y.values[static_cast<std::size_t>(t) * cout];
    for (int j = 0; j < k; ++j) {
      const int s = t + j - pad;
      if (s < 0 || s >= T) continue;
      const double* xs = &X.values[static_cast<std::size_t>(s) * cin];
      const double* kj = &K.values[static_cast<std::size_t>(j) * cin * cout];
      for (int i = 0; i < cin; ++i) {
        const double xi = xs[i];
        const double* kji = kj + static_cast<std::size_t>(i) * cout;
        for (int o = 0; o < cout; ++o) yt[o] += xi * kji[o];
      }
    }
  }
  const int out = next_id(x);
  std::vector<Var> inputs{x, kernels};
  if (bias.valid()) inputs.push_back(bias);
  const int bid = bias.valid() ? bias.id : -1;
  return g.emit("conv1d", std::move(y), inputs,
                [xi = x.id, ki = kernels.id, bid, out, T, k, cin, cout, pad](Graph& g) {
    const Tensor& dy = g.grad(out);
    const Tensor& X = g.value(xi);
    const Tensor& K = g.value(ki);
    const bool need_x = g.needs_grad(xi), need_k = g.needs_grad(ki);
    Tensor* dx = need_x ? &g.grad(xi) : nullptr;
    Tensor* dk = need_k ? &g.grad(ki) : nullptr;
    for (int t = 0; t < T; ++t) {
      const double* dyt = &dy.values[static_cast<std::size_t>(t) * cout];
      for (int j = 0; j < k; ++j) {
        const int s = t + j - pad;
        if (s < 0 || s >= T) continue;
        const std::size_t kbase = static_cast<std::size_t>(j) * cin * cout;
        for (int i = 0; i < cin; ++i) {
          const std::size_t kji = kbase + static_cast<std::size_t>(i) * cout;
          if (dx) {
            double acc = 0;
            for (int o = 0; o < cout; ++o) acc += dyt[o] * K.values[kji + o];
            dx->values[static_cast<std::size_t>(s) * cin + i] += acc;
          }
          if (dk) {
            const double xv = X.values[static_cast<std::size_t>(s) * cin + i];
            if (xv == 0.0) continue;
            for (int o = 0; o < cout; ++o) dk->values[kji + o] += xv * dyt[o];
          }
        }
      }
    }
    if (bid >= 0 && g.needs_grad(bid)) {
      Tensor& db = g.grad(bid);
      for (int t = 0; t < T; ++t)
        for (int o = 0; o < cout; ++o) db[o] += dy.values[static_cast<std::size_t>(t) * cout + o];
    }
  });
}

Var gru_step(Var x, Var h, Var wx, Var wh, Var bx, Var bh) {
  Graph& g = graph_of(x);
  const Tensor& X = x.value();
  const Tensor& H = h.value();
  const Tensor& WX = wx.value();
  const Tensor& WH = wh.value();
  const int n = X.rows(), in = X.cols(), hid = H.cols();
  if (H.rows() != n) shape_error("gru_step x/h", X.shape, H.shape);
  if (WX.rank() != 2 || WX.rows() != in || WX.cols() != 3 * hid) shape_error("gru_step wx", X.shape, WX.shape);
  if (WH.rank() != 2 || WH.rows() != hid || WH.cols() != 3 * hid) shape_error("gru_step wh", H.shape, WH.shape);
  if (static_cast<int>(bx.value().size()) != 3 * hid || static_cast<int>(bh.value().size()) != 3 * hid) {
    shape_error("gru_step bias", bx.shape(), bh.shape());
  }
  const int g3 = 3 * hid;
  // Cache: x-side gates, h-side gates, then r, z, n per row.
  struct Cache {
    std::vector<double> gx, gh, r, z, cand;
  };
  auto c = std::make_shared<Cache>();
  c->gx.assign(static_cast<std::size_t>(n) * g3, 0.0);
  c->gh.assign(static_cast<std::size_t>(n) * g3, 0.0);
  c->r.resize(static_cast<std::size_t>(n) * hid);
  c->z.resize(c->r.size());
  c->cand.resize(c->r.size());
  const Tensor& BX = bx.value();
  const Tensor& BH = bh.value();
  Tensor y({n, hid});
  for (int row = 0; row < n; ++row) {
    double* gx = &c->gx[static_cast<std::size_t>(row) * g3];
    double* gh = &c->gh[static_cast<std::size_t>(row) * g3];
    for (int i = 0; i < in; ++i) {
      const double xi = X.values[static_cast<std::size_t>(row) * in + i];
      const double* w = &WX.values[static_cast<std::size_t>(i) * g3];
      for (int j = 0; j < g3; ++j) gx[j] += xi * w[j];
    }
    for (int j = 0; j < g3; ++j) gx[j] += BX[j];
    for (int i = 0; i < hid; ++i) {
      const double hi = H.values[static_cast<std::size_t>(row) * hid + i];
      const double* w = &WH.values[static_cast<std::size_t>(i) * g3];
      for (int j = 0; j < g3; ++j) gh[j] += hi * w[j];
    }
    for (int j = 0; j < g3; ++j) gh[j] += BH[j];
    for (int j = 0; j < hid; ++j) {
      const std::size_t q = static_cast<std::size_t>(row) * hid + j;
      const double r = sigmoid_value(gx[j] + gh[j]);
      const double z = sigmoid_value(gx[hid + j] + gh[hid + j]);
      const double cand = std::tanh(gx[2 * hid + j] + r * gh[2 * hid + j]);
      c->r[q] = r;
      c->z[q] = z;
      c->cand[q] = cand;
      y.values[q] = (1.0 - z) * cand + z * H.values[q];
    }
  }
  const int out = next_id(x);
  return g.emit("gru_step", std::move(y), {x, h, wx, wh, bx, bh},
                [xi = x.id, hi = h.id, wxi = wx.id, whi = wh.id, bxi = bx.id, bhi = bh.id, out, n,
                 in, hid, c](Graph& g) {
    const int g3 = 3 * hid;
    const Tensor& dy = g.grad(out);
    const Tensor& X = g.value(xi);
    const Tensor& H = g.value(hi);
    const Tensor& WX = g.value(wxi);
    const Tensor& WH = g.value(whi);
    std::vector<double> dgx(g3), dgh(g3);
    for (int row = 0; row < n; ++row) {
      const double* gh = &c->gh[static_cast<std::size_t>(row) * g3];
      std::vector<double> dh_direct(hid);
      for (int j = 0; j < hid; ++j) {
        const std::size_t q = static_cast<std::size_t>(row) * hid + j;
        const double r = c->r[q], z = c->z[q], cand = c->cand[q];
        const double d = dy.values[q];
        const double dz = d * (H.values[q] - cand);
        const double dcand = d * (1.0 - z);
        dh_direct[j] = d * z;
        const double dcand_pre = dcand * (1.0 - cand * cand);
        const double dr = dcand_pre * gh[2 * hid + j];
        const double dr_pre = dr * r * (1.0 - r);
        const double dz_pre = dz * z * (1.0 - z);
        dgx[j] = dr_pre;
        dgx[hid + j] = dz_pre;
        dgx[2 * hid + j] = dcand_pre;
        dgh[j] = dr_pre;
        dgh[hid + j] = dz_pre;
        dgh[2 * hid + j] = dcand_pre * r;
      }
      if (g.needs_grad(bxi)) {
        Tensor& d = g.grad(bxi);
        for (int j = 0; j < g3; ++j) d[j] += dgx[j];
      }
      if (g.needs_grad(bhi)) {
        Tensor& d = g.grad(bhi);
        for (int j = 0; j < g3; ++j) d[j] += dgh[j];
      }
      if (g.needs_grad(wxi)) {
        Tensor& d = g.grad(wxi);
        for (int i = 0; i < in; ++i) {
          const double xv = X.values[static_cast<std::size_t>(row) * in + i];
          if (xv == 0.0) continue;
          double* di = &d.values[static_cast<std::size_t>(i) * g3];
          for (int j = 0; j < g3; ++j) di[j] += xv * dgx[j];
        }
      }
      if (g.needs_grad(whi)) {
        Tensor& d = g.grad(whi);
        for (int i = 0; i < hid; ++i) {
          const double hv = H.values[static_cast<std::size_t>(row) * hid + i];
          if (hv == 0.0) continue;
          double* di = &d.values[static_cast<std::size_t>(i) * g3];
          for (int j = 0; j < g3; ++j) di[j] += hv * dgh[j];
        }
      }
      if (g.needs_grad(xi)) {
        Tensor& d = g.grad(xi);
        for (int i = 0; i < in; ++i) {
          const double* w = &WX.values[static_cast<std::size_t>(i) * g3];
          double acc = 0;
          for (int j = 0; j < g3; ++j) acc += w[j] * dgx[j];
          d.values[static_cast<std::size_t>(row) * in + i] += acc;
        }
      }
      if (g.needs_grad(hi)) {
        Tensor& d = g.grad(hi);
        for (int i = 0; i < hid; ++i) {
          const double* w = &WH.values[static_cast<std::size_t>(i) * g3];
          double acc = 0;
          for (int j = 0; j < g3; ++j) acc += w[j] * dgh[j];
          d.values[static_cast<std::size_t>(row) * hid + i] += acc + dh_direct[i];
        }
      }
    }
  });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  double s = 0;
  for (double v : a.value().values) s += v;
  const int out = next_id(a);
  return g.emit("sum", Tensor({1}, {s}), {a}, [a = a.id, out](Graph& g) {
    const double d = g.grad(out)[0];
    Tensor& dx = g.grad(a);
    for (auto& v : dx.values) v += d;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw InvalidArgument("mean of an empty tensor");
  return scale(sum(a), 1.0 / n);
}

Var l1_loss(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.size() != B.size() || A.cols() != B.cols()) shape_error("l1_loss", A.shape, B.shape);
  if (A.empty()) throw InvalidArgument("l1_loss of empty tensors");
  double s = 0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    const double d = A[i] - B[i];
    g.note_kink(d > 0);
    s += std::abs(d);
  }
  const double n = static_cast<double>(A.size());
  const int out = next_id(a);
  return g.emit("l1_loss", Tensor({1}, {s / n}), {a, b}, [a = a.id, b = b.id, out, n](Graph& g) {
    const double d = g.grad(out)[0] / n;
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    const bool na = g.needs_grad(a), nb = g.needs_grad(b);
    Tensor* da = na ? &g.grad(a) : nullptr;
    Tensor* db = nb ? &g.grad(b) : nullptr;
    for (std::size_t i = 0; i < A.size(); ++i) {
      const double diff = A[i] - B[i];
      const double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
      if (da) (*da)[i] += d * sgn;
      if (db) (*db)[i] -= d * sgn;
    }
  });
}

Var bce_with_logits(Var logits, const Tensor& targets) {
  Graph& g = graph_of(logits);
  const Tensor& X = logits.value();
  if (X.size() != targets.size()) shape_error("bce_with_logits", X.shape, targets.shape);
  double s = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double x = X[i], y = targets[i];
    s += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
  }
  const double n = static_cast<double>(X.size());
  const int out = next_id(logits);
  return g.emit("bce_with_logits", Tensor({1}, {s / n}), {logits},
                [a = logits.id, out, n, targets](Graph& g) {
    const double d = g.grad(out)[0] / n;
    const Tensor& X = g.value(a);
    Tensor& dx = g.grad(a);
    for (std::size_t i = 0; i < X.size(); ++i) dx[i] += d * (sigmoid_value(X[i]) - targets[i]);
  });
}

Var cross_entropy(Var logits, const std::vector<int>& labels) {
  Graph& g = graph_of(logits);
  const Tensor& X = logits.value();
  const int n = X.rows(), m = X.cols();
  if (static_cast<int>(labels.size()) != n) {
    throw InvalidArgument("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(n) + " rows");
  }
  auto probs = std::make_shared<std::vector<double>>(X.values.size());
  double loss = 0;
  for (int r = 0; r < n; ++r) {
    if (labels[r] < 0 || labels[r] >= m) throw InvalidArgument("cross_entropy: label out of range");
    const double* x = &X.values[static_cast<std::size_t>(r) * m];
    double* p = &(*probs)[static_cast<std::size_t>(r) * m];
    const double mx = *std::max_element(x, x + m);
    double z = 0;
    for (int j = 0; j < m; ++j) z += (p[j] = std::exp(x[j] - mx));
    for (int j = 0; j < m; ++j) p[j] /= z;
    loss += -(x[labels[r]] - mx - std::log(z));
  }
  const int out = next_id(logits);
  return g.emit("cross_entropy", Tensor({1}, {loss / n}), {logits},
                [a = logits.id, out, n, m, labels, probs](Graph& g) {
    const double d = g.grad(out)[0] / n;
    Tensor& dx = g.grad(a);
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < m; ++j) {
        const std::size_t q = static_cast<std::size_t>(r) * m + j;
        dx[q] += d * ((*probs)[q] - (j == labels[r] ? 1.0 : 0.0));
      }
  });
}

}  // namespace speakaug::nn
