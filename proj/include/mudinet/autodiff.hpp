#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mudinet/tensor.hpp"

namespace mudinet::ad {

struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

using EigenMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using EigenConstMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline EigenMap as_eigen(Tensor& t) {
  return EigenMap(t.values.data(), static_cast<Eigen::Index>(t.rows),
                  static_cast<Eigen::Index>(t.cols));
}
inline EigenConstMap as_eigen(const Tensor& t) {
  return EigenConstMap(t.values.data(), static_cast<Eigen::Index>(t.rows),
                       static_cast<Eigen::Index>(t.cols));
}

inline constexpr double kLayerNormEps = 1e-8;

// Reverse-mode tape over Tensor values. Nodes are recorded in evaluation
// order; backward() walks them in exact reverse order, accumulating gradients
// additively, which is a reverse topological sweep because every node's
// parents precede it on the tape. Single-threaded by design: one tape per
// model instance, deterministic reduction order throughout.
class Tape {
 public:
  Var input(Tensor v) { return push(std::move(v), {}); }

  const Tensor& value(Var x) const { return nodes_[check(x)].value; }
  const Tensor& grad(Var x) const { return nodes_[check(x)].grad; }
  std::size_t size() const { return nodes_.size(); }

  // ---- primitives ----

  Var matmul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.cols != B.rows) {
      throw std::invalid_argument("matmul: shape mismatch " + shape_str(A) + " vs " +
                                  shape_str(B));
    }
    Tensor C(A.rows, B.cols);
    as_eigen(C).noalias() = as_eigen(A) * as_eigen(B);
    return push(std::move(C), [this, a, b](Var out) {
      const Tensor& G = grad_of(out);
      as_eigen(grad_of(a)).noalias() += as_eigen(G) * as_eigen(value(b)).transpose();
      as_eigen(grad_of(b)).noalias() += as_eigen(value(a)).transpose() * as_eigen(G);
    });
  }

  // A * B^T without materializing the transpose.
  Var matmul_nt(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.cols != B.cols) {
      throw std::invalid_argument("matmul_nt: shape mismatch " + shape_str(A) + " vs " +
                                  shape_str(B));
    }
    Tensor C(A.rows, B.rows);
    as_eigen(C).noalias() = as_eigen(A) * as_eigen(B).transpose();
    return push(std::move(C), [this, a, b](Var out) {
      const Tensor& G = grad_of(out);
      as_eigen(grad_of(a)).noalias() += as_eigen(G) * as_eigen(value(b));
      as_eigen(grad_of(b)).noalias() += as_eigen(G).transpose() * as_eigen(value(a));
    });
  }

  Var add(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require_same_shape(A, B, "add");
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C.values[i] += B.values[i];
    return push(std::move(C), [this, a, b](Var out) {
      const Tensor& G = grad_of(out);
      accumulate(a, G);
      accumulate(b, G);
    });
  }

  Var sub(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require_same_shape(A, B, "sub");
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C.values[i] -= B.values[i];
    return push(std::move(C), [this, a, b](Var out) {
      const Tensor& G = grad_of(out);
      accumulate(a, G);
      Tensor& gb = grad_of(b);
      for (std::size_t i = 0; i < G.size(); ++i) gb.values[i] -= G.values[i];
    });
  }

  Var mul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require_same_shape(A, B, "mul");
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C.values[i] *= B.values[i];
    return push(std::move(C), [this, a, b](Var out) {
      const Tensor& G = grad_of(out);
      const Tensor& A2 = value(a);
      const Tensor& B2 = value(b);
      Tensor& ga = grad_of(a);
      Tensor& gb = grad_of(b);
      for (std::size_t i = 0; i < G.size(); ++i) {
        ga.values[i] += G.values[i] * B2.values[i];
        gb.values[i] += G.values[i] * A2.values[i];
      }
    });
  }

  // A (m x n) plus a 1 x n row broadcast over every row.
  Var add_row_broadcast(Var a, Var row) {
    const Tensor& A = value(a);
    const Tensor& R = value(row);
    if (R.rows != 1 || R.cols != A.cols) {
      throw std::invalid_argument("add_row_broadcast: shape mismatch " + shape_str(A) +
                                  " vs " + shape_str(R));
    }
    Tensor C = A;
    for (std::size_t r = 0; r < C.rows; ++r) {
      for (std::size_t c = 0; c < C.cols; ++c) C.at(r, c) += R.values[c];
    }
    return push(std::move(C), [this, a, row](Var out) {
      const Tensor& G = grad_of(out);
      accumulate(a, G);
      Tensor& gr = grad_of(row);
      for (std::size_t r = 0; r < G.rows; ++r) {
        for (std::size_t c = 0; c < G.cols; ++c) gr.values[c] += G.at(r, c);
      }
    });
  }

  // A (m x n) times a 1 x n row, columnwise gain.
  Var mul_row_broadcast(Var a, Var row) {
    const Tensor& A = value(a);
    const Tensor& R = value(row);
    if (R.rows != 1 || R.cols != A.cols) {
      throw std::invalid_argument("mul_row_broadcast: shape mismatch " + shape_str(A) +
                                  " vs " + shape_str(R));
    }
    Tensor C = A;
    for (std::size_t r = 0; r < C.rows; ++r) {
      for (std::size_t c = 0; c < C.cols; ++c) C.at(r, c) *= R.values[c];
    }
    return push(std::move(C), [this, a, row](Var out) {
      const Tensor& G = grad_of(out);
      const Tensor& A2 = value(a);
      const Tensor& R2 = value(row);
      Tensor& ga = grad_of(a);
      Tensor& gr = grad_of(row);
      for (std::size_t r = 0; r < G.rows; ++r) {
        for (std::size_t c = 0; c < G.cols; ++c) {
          ga.at(r, c) += G.at(r, c) * R2.values[c];
          gr.values[c] += G.at(r, c) * A2.at(r, c);
        }
      }
    });
  }

  Var relu(Var a) {
    Tensor C = value(a);
    for (double& v : C.values) v = v > 0.0 ? v : 0.0;
    return push(std::move(C), [this, a](Var out) {
      const Tensor& G = grad_of(out);
      const Tensor& A = value(a);
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < G.size(); ++i) {
        if (A.values[i] > 0.0) ga.values[i] += G.values[i];
      }
    });
  }

  Var exp(Var a) {
    Tensor C = value(a);
    for (double& v : C.values) v = std::exp(v);
    return push(std::move(C), [this, a](Var out) {
      const Tensor& G = grad_of(out);
      const Tensor& Y = value(out);
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < G.size(); ++i) ga.values[i] += G.values[i] * Y.values[i];
    });
  }

  Var scale(Var a, double k) {
    Tensor C = value(a);
    for (double& v : C.values) v *= k;
    return push(std::move(C), [this, a, k](Var out) {
      const Tensor& G = grad_of(out);
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < G.size(); ++i) ga.values[i] += k * G.values[i];
    });
  }

  Var add_const(Var a, double k) {
    Tensor C = value(a);
    for (double& v : C.values) v += k;
    return push(std::move(C), [this, a](Var out) { accumulate(a, grad_of(out)); });
  }

  // Row-wise softmax; every output row sums to 1 (checked to 1e-9).
  Var softmax_rows(Var a) {
    Tensor C = value(a);
    for (std::size_t r = 0; r < C.rows; ++r) {
      double mx = C.at(r, 0);
      for (std::size_t c = 1; c < C.cols; ++c) mx = std::max(mx, C.at(r, c));
      double sum = 0.0;
      for (std::size_t c = 0; c < C.cols; ++c) {
        C.at(r, c) = std::exp(C.at(r, c) - mx);
        sum += C.at(r, c);
      }
      for (std::size_t c = 0; c < C.cols; ++c) C.at(r, c) /= sum;
      double check = 0.0;
      for (std::size_t c = 0; c < C.cols; ++c) check += C.at(r, c);
      if (std::abs(check - 1.0) >= 1e-9) {
        throw std::logic_error("softmax_rows: row sum deviates from 1");
      }
    }
    return push(std::move(C), [this, a](Var out) {
      const Tensor& G = grad_of(out);
      const Tensor& Y = value(out);
      Tensor& ga = grad_of(a);
      for (std::size_t r = 0; r < G.rows; ++r) {
        double dotv = 0.0;
        for (std::size_t c = 0; c < G.cols; ++c) dotv += G.at(r, c) * Y.at(r, c);
        for (std::size_t c = 0; c < G.cols; ++c) {
          ga.at(r, c) += Y.at(r, c) * (G.at(r, c) - dotv);
        }
      }
    });
  }

  // Row-wise standardization to mean 0, variance 1 (no affine; compose with
  // mul_row_broadcast/add_row_broadcast for gain and bias).
  Var layer_norm_rows(Var a) {
    const Tensor& A = value(a);
    Tensor C(A.rows, A.cols);
    std::vector<double> inv_sigma(A.rows);
    for (std::size_t r = 0; r < A.rows; ++r) {
      double mean = 0.0;
      for (std::size_t c = 0; c < A.cols; ++c) mean += A.at(r, c);
      mean /= static_cast<double>(A.cols);
      double var = 0.0;
      for (std::size_t c = 0; c < A.cols; ++c) {
        const double d = A.at(r, c) - mean;
        var += d * d;
      }
      var /= static_cast<double>(A.cols);
      inv_sigma[r] = 1.0 / std::sqrt(var + kLayerNormEps);
      for (std::size_t c = 0; c < A.cols; ++c) C.at(r, c) = (A.at(r, c) - mean) * inv_sigma[r];
    }
    return push(std::move(C), [this, a, inv_sigma = std::move(inv_sigma)](Var out) {
      const Tensor& G = grad_of(out);
      const Tensor& Y = value(out);
      Tensor& ga = grad_of(a);
      const double n = static_cast<double>(G.cols);
      for (std::size_t r = 0; r < G.rows; ++r) {
        double gmean = 0.0, gy = 0.0;
        for (std::size_t c = 0; c < G.cols; ++c) {
          gmean += G.at(r, c);
          gy += G.at(r, c) * Y.at(r, c);
        }
        gmean /= n;
        gy /= n;
        for (std::size_t c = 0; c < G.cols; ++c) {
          ga.at(r, c) += inv_sigma[r] * (G.at(r, c) - gmean - Y.at(r, c) * gy);
        }
      }
    });
  }

  // Mean squared error over all entries; scalar output.
  Var mse(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require_same_shape(A, B, "mse");
    double sum = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) {
      const double d = A.values[i] - B.values[i];
      sum += d * d;
    }
    const double n = static_cast<double>(A.size());
    return push(Tensor::scalar(sum / n), [this, a, b, n](Var out) {
      const double g = grad_of(out).values[0];
      const Tensor& A2 = value(a);
      const Tensor& B2 = value(b);
      Tensor& ga = grad_of(a);
      Tensor& gb = grad_of(b);
      for (std::size_t i = 0; i < A2.size(); ++i) {
        const double d = 2.0 * (A2.values[i] - B2.values[i]) * g / n;
        ga.values[i] += d;
        gb.values[i] -= d;
      }
    });
  }

  Var sum_all(Var a) {
    const Tensor& A = value(a);
    double sum = 0.0;
    for (double v : A.values) sum += v;
    return push(Tensor::scalar(sum), [this, a](Var out) {
      const double g = grad_of(out).values[0];
      Tensor& ga = grad_of(a);
      for (double& v : ga.values) v += g;
    });
  }

  Var mean_all(Var a) {
    const Tensor& A = value(a);
    double sum = 0.0;
    for (double v : A.values) sum += v;
    const double n = static_cast<double>(A.size());
    return push(Tensor::scalar(sum / n), [this, a, n](Var out) {
      const double g = grad_of(out).values[0] / n;
      Tensor& ga = grad_of(a);
      for (double& v : ga.values) v += g;
    });
  }

  // (group*B) x n -> B x n, averaging each consecutive block of `group` rows.
  Var mean_rows_grouped(Var a, std::size_t group) {
    const Tensor& A = value(a);
    if (group == 0 || A.rows % group != 0) {
      throw std::invalid_argument("mean_rows_grouped: rows of " + shape_str(A) +
                                  " not divisible by group " + std::to_string(group));
    }
    const std::size_t out_rows = A.rows / group;
    Tensor C(out_rows, A.cols);
    for (std::size_t b = 0; b < out_rows; ++b) {
      for (std::size_t k = 0; k < group; ++k) {
        for (std::size_t c = 0; c < A.cols; ++c) C.at(b, c) += A.at(b * group + k, c);
      }
      for (std::size_t c = 0; c < A.cols; ++c) C.at(b, c) /= static_cast<double>(group);
    }
    return push(std::move(C), [this, a, group](Var out) {
      const Tensor& G = grad_of(out);
      Tensor& ga = grad_of(a);
      for (std::size_t b = 0; b < G.rows; ++b) {
        for (std::size_t k = 0; k < group; ++k) {
          for (std::size_t c = 0; c < G.cols; ++c) {
            ga.at(b * group + k, c) += G.at(b, c) / static_cast<double>(group);
          }
        }
      }
    });
  }

  // B x n -> (B*times) x n, row i repeated `times` consecutive rows.
  Var repeat_rows(Var a, std::size_t times) {
    const Tensor& A = value(a);
    if (times == 0) throw std::invalid_argument("repeat_rows: times must be >= 1");
    Tensor C(A.rows * times, A.cols);
    for (std::size_t r = 0; r < A.rows; ++r) {
      for (std::size_t k = 0; k < times; ++k) {
        for (std::size_t c = 0; c < A.cols; ++c) C.at(r * times + k, c) = A.at(r, c);
      }
    }
    return push(std::move(C), [this, a, times](Var out) {
      const Tensor& G = grad_of(out);
      Tensor& ga = grad_of(a);
      for (std::size_t r = 0; r < ga.rows; ++r) {
        for (std::size_t k = 0; k < times; ++k) {
          for (std::size_t c = 0; c < G.cols; ++c) ga.at(r, c) += G.at(r * times + k, c);
        }
      }
    });
  }

  Var slice_rows(Var a, std::size_t row0, std::size_t nrows) {
    const Tensor& A = value(a);
    if (row0 + nrows > A.rows) {
      throw std::invalid_argument("slice_rows: range beyond " + shape_str(A));
    }
    Tensor C(nrows, A.cols);
    for (std::size_t r = 0; r < nrows; ++r) {
      for (std::size_t c = 0; c < A.cols; ++c) C.at(r, c) = A.at(row0 + r, c);
    }
    return push(std::move(C), [this, a, row0](Var out) {
      const Tensor& G = grad_of(out);
      Tensor& ga = grad_of(a);
      for (std::size_t r = 0; r < G.rows; ++r) {
        for (std::size_t c = 0; c < G.cols; ++c) ga.at(row0 + r, c) += G.at(r, c);
      }
    });
  }

  Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    const std::size_t cols = value(parts[0]).cols;
    std::size_t rows = 0;
    for (Var p : parts) {
      if (value(p).cols != cols) {
        throw std::invalid_argument("concat_rows: column mismatch " +
                                    shape_str(value(parts[0])) + " vs " + shape_str(value(p)));
      }
      rows += value(p).rows;
    }
    Tensor C(rows, cols);
    std::size_t r0 = 0;
    for (Var p : parts) {
      const Tensor& P = value(p);
      for (std::size_t r = 0; r < P.rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) C.at(r0 + r, c) = P.at(r, c);
      }
      r0 += P.rows;
    }
    std::vector<Var> owned(parts.begin(), parts.end());
    return push(std::move(C), [this, owned = std::move(owned)](Var out) {
      const Tensor& G = grad_of(out);
      std::size_t r0 = 0;
      for (Var p : owned) {
        Tensor& gp = grad_of(p);
        for (std::size_t r = 0; r < gp.rows; ++r) {
          for (std::size_t c = 0; c < G.cols; ++c) gp.at(r, c) += G.at(r0 + r, c);
        }
        r0 += gp.rows;
      }
    });
  }

  Var concat_cols(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.rows != B.rows) {
      throw std::invalid_argument("concat_cols: row mismatch " + shape_str(A) + " vs " +
                                  shape_str(B));
    }
    Tensor C(A.rows, A.cols + B.cols);
    for (std::size_t r = 0; r < A.rows; ++r) {
      for (std::size_t c = 0; c < A.cols; ++c) C.at(r, c) = A.at(r, c);
      for (std::size_t c = 0; c < B.cols; ++c) C.at(r, A.cols + c) = B.at(r, c);
    }
    return push(std::move(C), [this, a, b](Var out) {
      const Tensor& G = grad_of(out);
      Tensor& ga = grad_of(a);
      Tensor& gb = grad_of(b);
      for (std::size_t r = 0; r < G.rows; ++r) {
        for (std::size_t c = 0; c < ga.cols; ++c) ga.at(r, c) += G.at(r, c);
        for (std::size_t c = 0; c < gb.cols; ++c) gb.at(r, c) += G.at(r, ga.cols + c);
      }
    });
  }

  // ---- composites ----

  Var linear(Var x, Var w, Var b) { return add_row_broadcast(matmul(x, w), b); }

  // Reverse sweep from a scalar loss. Gradients accumulate additively into
  // every node reachable from the inputs.
  void backward(Var loss) {
    Tensor& g = nodes_[check(loss)].grad;
    if (g.size() != 1) {
      throw std::invalid_argument("backward: loss must be scalar, got " +
                                  shape_str(nodes_[loss.id].value));
    }
    g.values[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (nodes_[i].back) nodes_[i].back(Var{i});
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Var)> back;
  };

  std::vector<Node> nodes_;

  std::size_t check(Var x) const {
    if (x.id >= nodes_.size()) throw std::logic_error("Tape: invalid Var");
    return x.id;
  }

  Tensor& grad_of(Var x) { return nodes_[check(x)].grad; }

  void accumulate(Var x, const Tensor& g) {
    Tensor& t = grad_of(x);
    for (std::size_t i = 0; i < g.size(); ++i) t.values[i] += g.values[i];
  }

  Var push(Tensor v, std::function<void(Var)> back) {
    Node n;
    n.grad = Tensor(v.rows, v.cols);
    n.value = std::move(v);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }
};

}  // namespace mudinet::ad
