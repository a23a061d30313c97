#include "metaabd/tasks/evaluate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace metaabd::tasks {
namespace {

using logic::Term;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<Term> item_terms(std::size_t n) {
  std::vector<Term> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Term::sym(mil::item_symbol(i)));
  return out;
}

int argmax(const std::vector<double>& row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::optional<std::int64_t> term_value(const Term& t, const mil::Evidence& ev) {
  if (t.is_int()) return t.int_value();
  if (t.is_sym()) {
    // a base case that hands back an item means "its label"
    auto i = mil::item_index(t.symbol());
    if (i && *i < ev.label_logp.size()) return argmax(ev.label_logp[*i]);
  }
  return std::nullopt;
}

void check_items(const TaskSpec& t, const Perception& p, const Sequence& s) {
  const std::size_t want = t.arity == LabelArity::Monadic ? p.classifier.input_dim() : p.relation.item_dim();
  for (const auto& x : s.items) {
    if (static_cast<std::size_t>(x.size()) != want) {
      throw std::invalid_argument("item has " + std::to_string(x.size()) + " features, model expects " +
                                  std::to_string(want));
    }
  }
}

}  // namespace

Perception make_perception(const TaskSpec& t, std::size_t item_dim, std::size_t hidden, std::uint64_t seed) {
  Perception p;
  p.arity = t.arity;
  if (t.arity == LabelArity::Monadic) {
    p.classifier = nn::MLP({item_dim, hidden, t.classes}, seed);
  } else {
    p.relation = nn::DyadicModel(item_dim, hidden, seed);
  }
  return p;
}

logic::Atom make_goal(const TaskSpec& t, const Sequence& s, bool unknown_output) {
  const Term input = Term::list(item_terms(s.items.size()));
  if (t.id == TaskId::SortedConcept) return logic::Atom(Term::sym(t.target), {input});
  Term out;
  if (unknown_output) {
    out = Term::fresh_var();
  } else if (t.id == TaskId::Bogosort) {
    std::vector<Term> ranks;
    for (auto r : s.y) ranks.push_back(Term::integer(r));
    out = Term::list(ranks);
  } else {
    if (s.y.size() != 1) throw std::invalid_argument("scalar task needs one output value");
    out = Term::integer(s.y[0]);
  }
  return logic::Atom(Term::sym(t.target), {input, out});
}

mil::Evidence model_evidence(const TaskSpec& t, const Perception& p, const Sequence& s) {
  check_items(t, p, s);
  mil::Evidence ev;
  const std::size_t n = s.items.size();
  if (t.arity == LabelArity::Monadic) {
    ev.value_max = value_max(t.id, n, t.classes);
    if (n == 0) return ev;
    nn::Matrix X(static_cast<Eigen::Index>(p.classifier.input_dim()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) X.col(static_cast<Eigen::Index>(i)) = s.items[i];
    const nn::Matrix lp = p.classifier.log_predict_batch(X);
    for (std::size_t i = 0; i < n; ++i) {
      const auto col = lp.col(static_cast<Eigen::Index>(i));
      ev.label_logp.emplace_back(col.data(), col.data() + col.size());
    }
  } else {
    ev.pair_logp.assign(n, std::vector<double>(n, kNegInf));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) ev.pair_logp[i][j] = std::log(p.relation.predict_pair(s.items[i], s.items[j]));
      }
    }
  }
  return ev;
}

mil::Evidence argmax_evidence(const TaskSpec& t, const Perception& p, const Sequence& s) {
  mil::Evidence ev = model_evidence(t, p, s);
  for (auto& row : ev.label_logp) {
    const int best = argmax(row);
    for (std::size_t v = 0; v < row.size(); ++v) row[v] = static_cast<int>(v) == best ? 0.0 : kNegInf;
  }
  return ev;
}

mil::Evidence truth_evidence(const TaskSpec& t, const Sequence& s) {
  if (s.labels.size() != s.items.size()) throw std::invalid_argument("example has no ground-truth labels");
  mil::Evidence ev;
  const std::size_t n = s.labels.size();
  if (t.arity == LabelArity::Monadic) {
    std::vector<std::int64_t> l(s.labels.begin(), s.labels.end());
    return mil::one_hot_evidence(l, t.classes, value_max(t.id, n, t.classes));
  }
  ev.pair_logp.assign(n, std::vector<double>(n, kNegInf));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && s.labels[i] > s.labels[j]) ev.pair_logp[i][j] = 0.0;
    }
  }
  return ev;
}

std::optional<std::vector<std::int64_t>> run_program(const TaskSpec& t, const mil::Program& program,
                                                     const Sequence& s, const mil::Evidence& ev,
                                                     const mil::ProveOptions& opts) {
  mil::Example ex{make_goal(t, s, true), ev};
  auto r = mil::predict(t.kb, t.lang, program, ex, opts);
  if (!r) {
    if (t.id == TaskId::SortedConcept) return std::vector<std::int64_t>{0};
    return std::nullopt;
  }
  if (t.id == TaskId::SortedConcept) return std::vector<std::int64_t>{1};
  const Term out = r->answer.args[1];
  if (auto v = term_value(out, ev)) return std::vector<std::int64_t>{*v};
  auto elems = logic::list_elements(out);
  if (!elems) return std::nullopt;
  std::vector<std::int64_t> vals;
  for (const Term& e : *elems) {
    auto v = term_value(e, ev);
    if (!v) return std::nullopt;
    vals.push_back(*v);
  }
  return vals;
}

double item_accuracy(const TaskSpec& t, const Perception& p, const Dataset& d) {
  std::size_t ok = 0, total = 0;
  for (const Sequence& s : d.examples) {
    if (s.labels.size() != s.items.size()) continue;
    if (t.arity == LabelArity::Monadic) {
      for (std::size_t i = 0; i < s.items.size(); ++i) {
        const nn::Vector pr = p.classifier.predict(s.items[i]);
        Eigen::Index arg;
        pr.maxCoeff(&arg);
        ok += arg == s.labels[i];
        ++total;
      }
    } else {
      for (std::size_t i = 0; i < s.items.size(); ++i) {
        for (std::size_t j = 0; j < s.items.size(); ++j) {
          if (i == j || s.labels[i] == s.labels[j]) continue;
          ok += (p.relation.predict_pair(s.items[i], s.items[j]) > 0.5) == (s.labels[i] > s.labels[j]);
          ++total;
        }
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(total);
}

std::map<std::size_t, Metrics> evaluate(const TaskSpec& t, const mil::Program& program, const Perception& p,
                                        const Dataset& d, const EvalOptions& opts) {
  if (d.examples.empty()) throw std::invalid_argument("evaluation set is empty");
  struct Acc {
    Metrics m;
    double exact = 0, err = 0, log_err = 0, perm = 0, elem = 0;
    std::size_t items_ok = 0, items = 0;
  };
  std::map<std::size_t, Acc> acc;
  for (const Sequence& s : d.examples) {
    const mil::Evidence ev = opts.ground_truth ? truth_evidence(t, s) : argmax_evidence(t, p, s);
    const auto out = run_program(t, program, s, ev, opts.prove);
    for (std::size_t key : {std::size_t{0}, s.items.size()}) {
      Acc& a = acc[key];
      ++a.m.examples;
      if (!out) ++a.m.failures;
      if (t.id == TaskId::Sum || t.id == TaskId::Product || t.id == TaskId::SortedConcept) {
        const double y = static_cast<double>(s.y.at(0));
        double yhat;
        if (out && out->size() == 1) {
          yhat = static_cast<double>((*out)[0]);
        } else {
          // no answer: charge the worst value in range
          const double top = static_cast<double>(value_max(t.id, s.items.size(), t.classes));
          yhat = std::abs(top - y) > y ? top : 0.0;
        }
        a.exact += yhat == y;
        a.err += std::abs(yhat - y);
        a.log_err += std::abs(std::log1p(std::max(yhat, 0.0)) - std::log1p(std::max(y, 0.0)));
      } else {
        const bool same = out && *out == s.y;
        a.exact += same;
        a.perm += same;
        std::size_t right = 0;
        if (out && out->size() == s.y.size()) {
          for (std::size_t i = 0; i < s.y.size(); ++i) right += (*out)[i] == s.y[i];
        }
        a.elem += s.y.empty() ? 1.0 : static_cast<double>(right) / static_cast<double>(s.y.size());
      }
    }
  }
  std::map<std::size_t, Metrics> out;
  for (auto& [len, a] : acc) {
    Dataset part;
    part.task = d.task;
    for (const Sequence& s : d.examples) {
      if (len == 0 || s.items.size() == len) part.examples.push_back(s);
    }
    const double n = static_cast<double>(a.m.examples);
    Metrics m = a.m;
    m.acc = a.exact / n;
    m.mae = a.err / n;
    m.log_mae = a.log_err / n;
    m.perm_acc = a.perm / n;
    m.elem_acc = a.elem / n;
    m.raw_acc = opts.ground_truth ? 1.0 : item_accuracy(t, p, part);
    out[len] = m;
  }
  return out;
}

}  // namespace metaabd::tasks
