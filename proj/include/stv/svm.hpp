#pragma once

// Soft-margin linear SVM and a one-vs-one multi-class wrapper.
//
// train_binary minimizes 1/2 ||w||^2 + C * sum hinge(y(w.x + b)) through its
// dual with an SMO solver (maximal-violating-pair working-set selection).
// Convergence is certified by an explicit duality gap, not by iteration
// count. Multi-class uses n(n-1)/2 pairwise models and majority voting;
// vote ties break on summed |decision value|, then on class order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "stv/util.hpp"

namespace stv {

struct LinearModel {
  std::vector<double> w;
  double b = 0.0;
  std::string pos_class, neg_class;  // decision >= 0 votes pos_class

  double decision(const std::vector<double>& x) const {
    double s = b;
    for (size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
    return s;
  }
};

struct SvmTrace {
  std::vector<double> dual_objective;  // after every pair update
  double gap = 0.0;
  int iterations = 0;
};

namespace detail {

struct SmoProblem {
  const std::vector<std::vector<double>>& x;
  const std::vector<int>& y;  // +1 / -1
  double c;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

inline LinearModel train_binary(const std::vector<std::vector<double>>& x,
                                const std::vector<int>& y, double c,
                                double gap_tol = 1e-4,
                                SvmTrace* trace = nullptr) {
  const int n = int(x.size());
  if (n == 0 || int(y.size()) != n)
    throw std::invalid_argument("train_binary: empty or mismatched inputs");
  const size_t dim = x.front().size();
  bool has_pos = false, has_neg = false;
  for (int i = 0; i < n; ++i) {
    if (x[i].size() != dim)
      throw std::invalid_argument("train_binary: dimension mismatch at row " +
                                  std::to_string(i));
    if (y[i] != 1 && y[i] != -1)
      throw std::invalid_argument("train_binary: labels must be +1/-1");
    (y[i] > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg)
    throw std::invalid_argument("train_binary: both classes must be present");
  if (!(c > 0.0)) throw std::invalid_argument("train_binary: C must be > 0");

  // cache Q_ij = y_i y_j x_i . x_j
  std::vector<double> q(size_t(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = y[i] * y[j] * detail::dot(x[i], x[j]);
      q[size_t(i) * n + j] = v;
      q[size_t(j) * n + i] = v;
    }

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // G_i = (Q a)_i - 1

  auto in_up = [&](int i) {
    return (y[i] > 0 && alpha[i] < c) || (y[i] < 0 && alpha[i] > 0);
  };
  auto in_low = [&](int i) {
    return (y[i] > 0 && alpha[i] > 0) || (y[i] < 0 && alpha[i] < c);
  };

  auto weights = [&]() {
    std::vector<double> w(dim, 0.0);
    for (int i = 0; i < n; ++i)
      if (alpha[i] > 0)
        for (size_t d = 0; d < dim; ++d) w[d] += alpha[i] * y[i] * x[i][d];
    return w;
  };

  auto bias = [&]() {
    // mean over free vectors; midpoint of the bound interval otherwise
    double ub = 1e300, lb = -1e300, sum_free = 0.0;
    int nr_free = 0;
    for (int i = 0; i < n; ++i) {
      const double yg = y[i] * grad[i];
      if (alpha[i] >= c) {
        if (y[i] < 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else if (alpha[i] <= 0) {
        if (y[i] > 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else {
        ++nr_free;
        sum_free += yg;
      }
    }
    const double rho = nr_free > 0 ? sum_free / nr_free : (ub + lb) / 2.0;
    return -rho;
  };

  auto dual_objective = [&]() {
    double sum_a = 0.0, ag = 0.0;
    for (int i = 0; i < n; ++i) {
      sum_a += alpha[i];
      ag += alpha[i] * grad[i];
    }
    return 0.5 * (sum_a - ag);
  };

  auto duality_gap = [&](const std::vector<double>& w, double b) {
    double primal = 0.5 * detail::dot(w, w);
    for (int i = 0; i < n; ++i)
      primal += c * std::max(0.0, 1.0 - y[i] * (detail::dot(w, x[i]) + b));
    return primal - dual_objective();
  };

  const double kkt_eps = 1e-8;
  const int max_iter = 1000000;
  int iter = 0;
  double gap = 1e300;

  for (; iter < max_iter; ++iter) {
    // maximal violating pair
    int i = -1, j = -1;
    double m_up = -1e300, m_low = 1e300;
    for (int k = 0; k < n; ++k) {
      const double v = -y[k] * grad[k];
      if (in_up(k) && v > m_up) {
        m_up = v;
        i = k;
      }
      if (in_low(k) && v < m_low) {
        m_low = v;
        j = k;
      }
    }
    if (i < 0 || j < 0 || m_up - m_low < kkt_eps) {
      gap = duality_gap(weights(), bias());
      break;
    }
    // certify early once the gap is already below tolerance
    if (iter > 0 && iter % 256 == 0) {
      gap = duality_gap(weights(), bias());
      if (gap < gap_tol) break;
    }

    const double old_ai = alpha[i], old_aj = alpha[j];
    const double qii = q[size_t(i) * n + i], qjj = q[size_t(j) * n + j];
    const double qij = q[size_t(i) * n + j];

    if (y[i] != y[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0) quad = 1e-12;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0) quad = 1e-12;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
      }
      if (sum > c) {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }

    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (int k = 0; k < n; ++k)
      grad[k] += q[size_t(k) * n + i] * dai + q[size_t(k) * n + j] * daj;

    if (trace) trace->dual_objective.push_back(dual_objective());
  }

  if (gap >= gap_tol) {
    // KKT pair selection converged; make sure the certificate agrees
    gap = duality_gap(weights(), bias());
    if (gap >= gap_tol)
      throw std::runtime_error("train_binary: solver did not reach gap " +
                               fmt_g17(gap_tol) + " (gap " + fmt_g17(gap) +
                               ")");
  }

  LinearModel m;
  m.w = weights();
  m.b = bias();
  if (trace) {
    trace->gap = gap;
    trace->iterations = iter;
  }
  return m;
}

// ---------------------------------------------------------------------------
// One-vs-one multi-class

struct OvoModel {
  std::vector<std::string> classes;  // sorted; defines vote-tie order
  std::vector<LinearModel> models;   // pair (i,j), i<j, in class order
  double c = 1.0;

  int dim() const { return models.empty() ? 0 : int(models.front().w.size()); }
  int n_pairs() const { return int(models.size()); }
};

inline OvoModel train_ovo(const std::vector<std::vector<double>>& x,
                          const std::vector<std::string>& labels, double c,
                          double gap_tol = 1e-4) {
  if (x.size() != labels.size() || x.empty())
    throw std::invalid_argument("train_ovo: empty or mismatched inputs");
  std::set<std::string> uniq(labels.begin(), labels.end());
  if (uniq.size() < 2)
    throw std::invalid_argument("train_ovo: need at least 2 classes");

  OvoModel m;
  m.classes.assign(uniq.begin(), uniq.end());
  m.c = c;
  const int nc = int(m.classes.size());
  for (int i = 0; i < nc; ++i)
    for (int j = i + 1; j < nc; ++j) {
      std::vector<std::vector<double>> px;
      std::vector<int> py;
      for (size_t r = 0; r < x.size(); ++r) {
        if (labels[r] == m.classes[i]) {
          px.push_back(x[r]);
          py.push_back(+1);
        } else if (labels[r] == m.classes[j]) {
          px.push_back(x[r]);
          py.push_back(-1);
        }
      }
      if (px.empty() || !std::count(py.begin(), py.end(), 1) ||
          !std::count(py.begin(), py.end(), -1))
        throw std::invalid_argument("train_ovo: class with zero samples (" +
                                    m.classes[i] + " vs " + m.classes[j] + ")");
      LinearModel bin = train_binary(px, py, c, gap_tol);
      bin.pos_class = m.classes[i];
      bin.neg_class = m.classes[j];
      m.models.push_back(std::move(bin));
    }
  return m;
}

inline std::string predict(const OvoModel& m, const std::vector<double>& x) {
  if (m.models.empty()) throw std::invalid_argument("predict: empty model");
  if (int(x.size()) != m.dim())
    throw std::invalid_argument("predict: dimension mismatch");

  std::map<std::string, int> votes;
  std::map<std::string, double> strength;  // summed |decision| of won votes
  for (const auto& c : m.classes) {
    votes[c] = 0;
    strength[c] = 0.0;
  }
  for (const auto& bin : m.models) {
    const double f = bin.decision(x);
    const std::string& winner = f >= 0.0 ? bin.pos_class : bin.neg_class;
    votes[winner] += 1;
    strength[winner] += std::fabs(f);
  }

  std::string best = m.classes.front();
  for (const auto& cls : m.classes) {
    if (cls == best) continue;
    if (votes[cls] > votes[best] ||
        (votes[cls] == votes[best] && strength[cls] > strength[best]))
      best = cls;  // equal votes and strength keeps the earlier class
  }
  return best;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
  std::vector<std::string> classes;
  std::vector<std::vector<long>> confusion;  // [true][predicted]
  std::vector<double> recall;                // per class; 0 when no support
  std::vector<long> support;
  double accuracy = 0.0;
};

inline EvalReport evaluate(const OvoModel& m,
                           const std::vector<std::vector<double>>& x,
                           const std::vector<std::string>& labels) {
  if (x.empty() || x.size() != labels.size())
    throw std::invalid_argument("evaluate: empty or mismatched test set");
  std::map<std::string, int> index;
  for (size_t i = 0; i < m.classes.size(); ++i) index[m.classes[i]] = int(i);

  EvalReport r;
  r.classes = m.classes;
  const int nc = int(m.classes.size());
  r.confusion.assign(nc, std::vector<long>(nc, 0));
  r.support.assign(nc, 0);
  long correct = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    auto it = index.find(labels[i]);
    if (it == index.end())
      throw std::invalid_argument("evaluate: unknown label '" + labels[i] +
                                  "'");
    const int truth = it->second;
    const int pred = index[predict(m, x[i])];
    r.confusion[truth][pred] += 1;
    r.support[truth] += 1;
    if (truth == pred) ++correct;
  }
  r.recall.assign(nc, 0.0);
  for (int c = 0; c < nc; ++c)
    if (r.support[c] > 0)
      r.recall[c] = double(r.confusion[c][c]) / double(r.support[c]);
  r.accuracy = double(correct) / double(x.size());
  return r;
}

inline std::string report_to_tsv(const EvalReport& r) {
  std::string out = "class\trecall\tsupport\n";
  for (size_t c = 0; c < r.classes.size(); ++c)
    out += r.classes[c] + '\t' + fmt_g17(r.recall[c]) + '\t' +
           std::to_string(r.support[c]) + '\n';
  out += "overall_accuracy\t" + fmt_g17(r.accuracy) + "\t" +
         std::to_string([&] {
           long s = 0;
           for (long v : r.support) s += v;
           return s;
         }()) +
         '\n';
  return out;
}

inline std::string confusion_to_tsv(const EvalReport& r) {
  std::string out = "true\\pred";
  for (const auto& c : r.classes) out += '\t' + c;
  out += '\n';
  for (size_t i = 0; i < r.classes.size(); ++i) {
    out += r.classes[i];
    for (size_t j = 0; j < r.classes.size(); ++j)
      out += '\t' + std::to_string(r.confusion[i][j]);
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::string pct(double v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * v);
  return buf;
}

}  // namespace detail

// aligned per-class table; pass one or two reports (same class set)
inline std::string render_report_table(
    const std::vector<std::pair<std::string, const EvalReport*>>& columns) {
  if (columns.empty()) return {};
  const auto& classes = columns.front().second->classes;
  size_t cw = 6;
  for (const auto& c : classes) cw = std::max(cw, c.size());

  std::string out;
  auto pad = [](std::string s, size_t n) {
    s.resize(std::max(s.size(), n), ' ');
    return s;
  };
  out += pad("Action", cw + 2);
  for (const auto& [name, _] : columns) out += pad(name, 12);
  out += '\n';
  for (size_t c = 0; c < classes.size(); ++c) {
    out += pad(classes[c], cw + 2);
    for (const auto& [_, rep] : columns) out += pad(detail::pct(rep->recall[c]), 12);
    out += '\n';
  }
  out += pad("overall", cw + 2);
  for (const auto& [_, rep] : columns) out += pad(detail::pct(rep->accuracy), 12);
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Optional C selection: stratified 5-fold cross-validation on the training
// split over a small grid; ties take the smaller C.

inline double select_c(const std::vector<std::vector<double>>& x,
                       const std::vector<std::string>& labels,
                       const std::vector<double>& grid, int folds,
                       uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("select_c: empty grid");
  std::vector<size_t> order(x.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 rng(seed);
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.bounded(i)]);

  // round-robin fold assignment per class keeps folds stratified
  std::map<std::string, int> next_fold;
  std::vector<int> fold(x.size(), 0);
  for (size_t i : order) fold[i] = next_fold[labels[i]]++ % folds;

  double best_c = grid.front(), best_acc = -1.0;
  for (double c : grid) {
    long correct = 0, total = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<std::vector<double>> tx;
      std::vector<std::string> tl;
      for (size_t i = 0; i < x.size(); ++i)
        if (fold[i] != f) {
          tx.push_back(x[i]);
          tl.push_back(labels[i]);
        }
      std::set<std::string> seen(tl.begin(), tl.end());
      if (seen.size() < 2) continue;
      OvoModel m = train_ovo(tx, tl, c);
      for (size_t i = 0; i < x.size(); ++i)
        if (fold[i] == f && seen.count(labels[i])) {
          correct += predict(m, x[i]) == labels[i];
          ++total;
        }
    }
    const double acc = total ? double(correct) / double(total) : 0.0;
    if (acc > best_acc) {
      best_acc = acc;
      best_c = c;
    }
  }
  return best_c;
}

// ---------------------------------------------------------------------------
// Model file (little-endian):
//   magic "STVL", u32 version=1, f64 C, u32 dim, u32 n_classes,
//   per class: u16 length + label bytes,
//   u32 n_models, per model: u32 i, u32 j, f64 bias, f64*dim weights.

inline std::string ovo_to_bytes(const OvoModel& m) {
  std::string out = "STVL";
  put_u32(out, 1);
  put_f64(out, m.c);
  put_u32(out, uint32_t(m.dim()));
  put_u32(out, uint32_t(m.classes.size()));
  for (const auto& c : m.classes) {
    put_u16(out, uint16_t(c.size()));
    out += c;
  }
  put_u32(out, uint32_t(m.models.size()));
  std::map<std::string, uint32_t> index;
  for (size_t i = 0; i < m.classes.size(); ++i) index[m.classes[i]] = uint32_t(i);
  for (const auto& bin : m.models) {
    put_u32(out, index.at(bin.pos_class));
    put_u32(out, index.at(bin.neg_class));
    put_f64(out, bin.b);
    for (double w : bin.w) put_f64(out, w);
  }
  return out;
}

inline OvoModel ovo_from_bytes(std::string_view bytes, const std::string& ctx) {
  ByteReader rd(bytes, ctx);
  if (rd.bytes(4) != "STVL")
    throw std::runtime_error("bad model file magic: " + ctx);
  if (rd.u32() != 1)
    throw std::runtime_error("unsupported model file version: " + ctx);
  OvoModel m;
  m.c = rd.f64();
  const uint32_t dim = rd.u32();
  const uint32_t nc = rd.u32();
  for (uint32_t i = 0; i < nc; ++i) {
    const uint16_t len = rd.u16();
    m.classes.push_back(rd.bytes(len));
  }
  const uint32_t nm = rd.u32();
  for (uint32_t k = 0; k < nm; ++k) {
    LinearModel bin;
    bin.pos_class = m.classes.at(rd.u32());
    bin.neg_class = m.classes.at(rd.u32());
    bin.b = rd.f64();
    bin.w.resize(dim);
    for (uint32_t d = 0; d < dim; ++d) bin.w[d] = rd.f64();
    m.models.push_back(std::move(bin));
  }
  return m;
}

}  // namespace stv
