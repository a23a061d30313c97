#include "metaabd/tasks/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace metaabd::tasks {
namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = s.find(sep, start);
    out.emplace_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, std::size_t line) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::runtime_error("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  (void)ec;
  out.append(buf, p);
}

std::uint32_t read_be32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("IDX header truncated");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

}  // namespace

DigitGenerator::DigitGenerator(std::size_t classes, std::size_t dim, double noise, std::uint64_t seed)
    : dim_(dim), noise_(noise) {
  if (classes == 0 || dim == 0) throw std::invalid_argument("generator needs classes and dim");
  if (noise < 0) throw std::invalid_argument("noise must be nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t c = 0; c < classes; ++c) {
    nn::Vector p(static_cast<Eigen::Index>(dim));
    for (auto& v : p) v = u(rng);
    prototypes_.push_back(std::move(p));
  }
}

nn::Vector DigitGenerator::sample(int label, std::mt19937_64& rng) const {
  if (label < 0 || static_cast<std::size_t>(label) >= prototypes_.size()) throw std::out_of_range("label");
  std::normal_distribution<double> g(0.0, noise_);
  nn::Vector x = prototypes_[static_cast<std::size_t>(label)];
  for (auto& v : x) v = std::clamp(v + (noise_ > 0 ? g(rng) : 0.0), 0.0, 1.0);
  return x;
}

std::vector<std::int64_t> task_output(TaskId task, const std::vector<int>& digits) {
  switch (task) {
    case TaskId::Sum: return {std::accumulate(digits.begin(), digits.end(), std::int64_t{0})};
    case TaskId::Product: {
      std::int64_t p = 1;
      for (int d : digits) p *= d;
      return {p};
    }
    case TaskId::SortedConcept: return {std::is_sorted(digits.rbegin(), digits.rend()) ? 1 : 0};
    case TaskId::Bogosort: {
      // rank 1 is the largest element
      std::vector<std::int64_t> ranks;
      for (int d : digits) {
        ranks.push_back(1 + std::count_if(digits.begin(), digits.end(), [d](int e) { return e > d; }));
      }
      return ranks;
    }
  }
  return {};
}

Dataset gen_sequences(const DigitGenerator& gen, TaskId task, const GenOptions& opts) {
  if (opts.count == 0) throw std::invalid_argument("example count must be positive");
  if (opts.min_len == 0 || opts.min_len > opts.max_len) throw std::invalid_argument("bad length range");
  if (opts.min_digit < 0 || opts.max_digit < opts.min_digit ||
      static_cast<std::size_t>(opts.max_digit) >= gen.classes()) {
    throw std::invalid_argument("bad digit range");
  }
  const bool distinct = task == TaskId::Bogosort || task == TaskId::SortedConcept;
  const auto range = static_cast<std::size_t>(opts.max_digit - opts.min_digit + 1);
  if (distinct && opts.max_len > range) {
    throw std::invalid_argument("sorting needs distinct digits: length " + std::to_string(opts.max_len) +
                                " exceeds " + std::to_string(range) + " classes");
  }
  std::mt19937_64 rng(opts.seed);
  Dataset d;
  d.task = task;
  std::uniform_int_distribution<std::size_t> len_dist(opts.min_len, opts.max_len);
  std::uniform_int_distribution<int> digit(opts.min_digit, opts.max_digit);
  for (std::size_t n = 0; n < opts.count; ++n) {
    const std::size_t len = len_dist(rng);
    std::vector<int> digits;
    if (distinct) {
      std::vector<int> pool(range);
      std::iota(pool.begin(), pool.end(), opts.min_digit);
      std::shuffle(pool.begin(), pool.end(), rng);
      digits.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(len));
      if (task == TaskId::SortedConcept) std::sort(digits.rbegin(), digits.rend());
    } else {
      for (std::size_t i = 0; i < len; ++i) digits.push_back(digit(rng));
    }
    Sequence s;
    for (int v : digits) s.items.push_back(gen.sample(v, rng));
    s.labels = digits;
    s.y = task_output(task, digits);
    d.examples.push_back(std::move(s));
  }
  return d;
}

Dataset sorted_subset(const Dataset& sorting, std::size_t max) {
  if (sorting.task != TaskId::Bogosort) throw std::invalid_argument("sorted subset needs a sorting dataset");
  // already-sorted examples grouped by length; short lists dominate the pool
  // (a random order is sorted with chance 1/n!), so draw round-robin,
  // longest first, to keep the recursive case visible
  std::map<std::size_t, std::vector<const Sequence*>, std::greater<>> by_len;
  for (const Sequence& s : sorting.examples) {
    bool in_order = s.y.size() == s.items.size() && !s.items.empty();
    for (std::size_t i = 0; in_order && i < s.y.size(); ++i) in_order = s.y[i] == static_cast<std::int64_t>(i + 1);
    if (in_order) by_len[s.items.size()].push_back(&s);
  }
  Dataset out;
  out.task = TaskId::SortedConcept;
  for (std::size_t round = 0; out.examples.size() < max; ++round) {
    bool any = false;
    for (const auto& [len, seqs] : by_len) {
      if (round >= seqs.size() || out.examples.size() >= max) continue;
      Sequence t = *seqs[round];
      t.y = {1};
      out.examples.push_back(std::move(t));
      any = true;
    }
    if (!any) break;
  }
  return out;
}

void write_dataset(const Dataset& d, const std::filesystem::path& path, bool with_labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::string line;
  for (const Sequence& s : d.examples) {
    line.clear();
    line += to_string(d.task);
    line += '\t';
    line += std::to_string(s.items.size());
    line += '\t';
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      if (i) line += ';';
      for (Eigen::Index k = 0; k < s.items[i].size(); ++k) {
        if (k) line += ',';
        append_double(line, s.items[i](k));
      }
    }
    line += '\t';
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (i) line += ',';
      line += std::to_string(s.y[i]);
    }
    if (with_labels && !s.labels.empty()) {
      line += '\t';
      for (std::size_t i = 0; i < s.labels.size(); ++i) {
        if (i) line += ',';
        line += std::to_string(s.labels[i]);
      }
    }
    line += '\n';
    out << line;
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  Dataset d;
  std::string text;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.empty()) continue;
    const auto cols = split(text, '\t');
    auto fail = [&](const std::string& why) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + why);
    };
    if (cols.size() != 4 && cols.size() != 5) fail("expected 4 or 5 tab-separated columns");
    auto task = parse_task_id(cols[0]);
    if (!task) fail("unknown task '" + cols[0] + "'");
    if (first) d.task = *task;
    if (*task != d.task) fail("mixed tasks in one file");
    first = false;
    Sequence s;
    const auto len = parse_number<std::size_t>(cols[1], lineno);
    if (len > 0) {
      for (const std::string& item : split(cols[2], ';')) {
        const auto vals = split(item, ',');
        nn::Vector x(static_cast<Eigen::Index>(vals.size()));
        for (std::size_t k = 0; k < vals.size(); ++k) x(static_cast<Eigen::Index>(k)) = parse_number<double>(vals[k], lineno);
        if (!s.items.empty() && x.size() != s.items[0].size()) fail("items differ in feature count");
        s.items.push_back(std::move(x));
      }
    }
    if (s.items.size() != len) fail("length column says " + cols[1] + " but found " + std::to_string(s.items.size()) + " items");
    for (const std::string& v : split(cols[3], ',')) s.y.push_back(parse_number<std::int64_t>(v, lineno));
    if (cols.size() == 5) {
      for (const std::string& v : split(cols[4], ',')) s.labels.push_back(parse_number<int>(v, lineno));
      if (s.labels.size() != len) fail("label count does not match length");
    }
    if (!d.examples.empty() && !s.items.empty() && d.dim() != 0 &&
        s.items[0].size() != static_cast<Eigen::Index>(d.dim())) {
      fail("feature count differs from earlier lines");
    }
    d.examples.push_back(std::move(s));
  }
  return d;
}

std::vector<std::pair<nn::Vector, int>> load_idx(const std::filesystem::path& images,
                                                 const std::filesystem::path& labels) {
  std::ifstream img(images, std::ios::binary), lab(labels, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open " + images.string());
  if (!lab) throw std::runtime_error("cannot open " + labels.string());
  if (read_be32(img) != 0x00000803) throw std::runtime_error(images.string() + ": bad IDX image magic");
  if (read_be32(lab) != 0x00000801) throw std::runtime_error(labels.string() + ": bad IDX label magic");
  const std::uint32_t n = read_be32(img);
  const std::uint32_t rows = read_be32(img);
  const std::uint32_t cols = read_be32(img);
  const std::uint32_t nl = read_be32(lab);
  if (n != nl) throw std::runtime_error("IDX image count " + std::to_string(n) + " != label count " + std::to_string(nl));
  const std::size_t pixels = std::size_t{rows} * cols;
  std::vector<std::pair<nn::Vector, int>> out;
  out.reserve(n);
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < n; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    char l = 0;
    lab.read(&l, 1);
    if (!img || !lab) throw std::runtime_error("IDX payload truncated at item " + std::to_string(i));
    const int label = static_cast<unsigned char>(l);
    if (label > 9) throw std::runtime_error("IDX label " + std::to_string(label) + " outside 0..9");
    nn::Vector x(static_cast<Eigen::Index>(pixels));
    for (std::size_t k = 0; k < pixels; ++k) x(static_cast<Eigen::Index>(k)) = buf[k] / 255.0;
    out.emplace_back(std::move(x), label);
  }
  return out;
}

}  // namespace metaabd::tasks
