#include "hyperlearn/io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hyperlearn/error.hpp"
#include "hyperlearn/text.hpp"

namespace hyperlearn::io {
namespace {

using text::format_real;

// Line reader that tracks 1-based line numbers and skips blank lines.
class LineReader {
 public:
  LineReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  bool next(std::string& line) {
    while (std::getline(is_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!text::trim(line).empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

  template <typename F>
  auto guard(F&& f) const -> decltype(f()) {
    try {
      return f();
    } catch (const ParseError&) {
      throw;
    } catch (const InvalidArgument& e) {
      fail(e.what());
    }
  }

 private:
  std::istream& is_;
  std::string source_;
  std::size_t line_no_ = 0;
};

void write_rows(std::ostream& os, const double* data, Eigen::Index rows, Eigen::Index cols) {
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (j) os << '\t';
      os << format_real(data[i * cols + j]);
    }
    os << '\n';
  }
}

void read_rows(LineReader& in, double* data, Eigen::Index rows, Eigen::Index cols) {
  std::string line;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!in.next(line)) in.fail("unexpected end of file, expected " + std::to_string(rows) + " rows");
    const auto f = text::fields(line);
    if (static_cast<Eigen::Index>(f.size()) != cols) {
      in.fail("expected " + std::to_string(cols) + " columns, got " + std::to_string(f.size()));
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      data[i * cols + j] = in.guard([&] { return text::parse_real(f[j], "real"); });
    }
  }
}

std::vector<std::string_view> header(LineReader& in, std::string& line, std::string_view tag) {
  if (!in.next(line)) in.fail("empty file, expected '" + std::string(tag) + "' header");
  auto f = text::fields(line);
  if (f.empty() || f[0] != tag) in.fail("expected '" + std::string(tag) + "' header");
  return f;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw InvalidArgument("cannot open " + p.string());
  return is;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw InvalidArgument("cannot write " + p.string());
  return os;
}

}  // namespace

void write_relation(std::ostream& os, const SparseTensor& x) {
  os << "#dims";
  for (auto d : x.dims()) os << ' ' << d;
  os << ' ' << (x.observed_only() ? "observed" : "full") << '\n';
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    for (auto i : x.index(e)) os << i << '\t';
    os << format_real(x.value(e)) << '\n';
  }
}

SparseTensor read_relation(std::istream& is, const std::string& source) {
  LineReader in(is, source);
  std::string line;
  auto h = header(in, line, "#dims");
  bool observed = true;
  if (h.size() > 1 && (h.back() == "observed" || h.back() == "full")) {
    observed = h.back() == "observed";
    h.pop_back();
  }
  std::vector<std::size_t> dims;
  for (std::size_t i = 1; i < h.size(); ++i) {
    dims.push_back(in.guard([&] { return text::parse_uint(h[i], "dimension"); }));
  }
  if (dims.size() < 2) in.fail("#dims needs at least two modes");
  const std::size_t k = dims.size();

  std::vector<Coord> coords;
  std::vector<double> values;
  while (in.next(line)) {
    const auto f = text::fields(line);
    if (f.size() != k + 1) {
      in.fail("expected " + std::to_string(k) + " indices and a value, got " +
              std::to_string(f.size()) + " fields");
    }
    for (std::size_t m = 0; m < k; ++m) {
      const auto i = in.guard([&] { return text::parse_uint(f[m], "index"); });
      if (i >= dims[m]) {
        in.fail("index " + std::to_string(i) + " out of range for mode " + std::to_string(m));
      }
      coords.push_back(static_cast<Coord>(i));
    }
    values.push_back(in.guard([&] { return text::parse_real(f[k], "value"); }));
  }
  return in.guard([&] { return SparseTensor(dims, std::move(coords), std::move(values), observed); });
}

void write_graph(std::ostream& os, const IntraGraph& g) {
  os << "#nodes " << g.size() << '\n';
  for (const auto& e : g.edges()) {
    os << e.u << '\t' << e.v;
    if (e.weight != 1.0) os << '\t' << format_real(e.weight);
    os << '\n';
  }
}

IntraGraph read_graph(std::istream& is, const std::string& source) {
  LineReader in(is, source);
  std::string line;
  const auto h = header(in, line, "#nodes");
  if (h.size() != 2) in.fail("expected '#nodes n'");
  const auto n = in.guard([&] { return text::parse_uint(h[1], "node count"); });
  std::vector<Edge> edges;
  while (in.next(line)) {
    const auto f = text::fields(line);
    if (f.size() != 2 && f.size() != 3) in.fail("expected 'i j [weight]'");
    Edge e;
    e.u = in.guard([&] { return text::parse_uint(f[0], "node"); });
    e.v = in.guard([&] { return text::parse_uint(f[1], "node"); });
    if (f.size() == 3) e.weight = in.guard([&] { return text::parse_real(f[2], "weight"); });
    if (e.u >= n || e.v >= n) in.fail("edge endpoint out of range");
    edges.push_back(e);
  }
  return in.guard([&] { return IntraGraph::from_edges(n, edges); });
}

void write_features(std::ostream& os, const Matrix& features) {
  write_rows(os, features.data(), features.rows(), features.cols());
}

Matrix read_features(std::istream& is, const std::string& source) {
  LineReader in(is, source);
  std::string line;
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  while (in.next(line)) {
    const auto f = text::fields(line);
    if (rows == 0) cols = f.size();
    if (f.size() != cols) in.fail("ragged feature row");
    for (auto v : f) data.push_back(in.guard([&] { return text::parse_real(v, "feature"); }));
    ++rows;
  }
  if (rows == 0) in.fail("no feature rows");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

void write_factors(std::ostream& os, const FactorSet& fs) {
  os << "#factors " << fs.order() << ' ' << fs.rank << '\n';
  for (std::size_t m = 0; m < fs.order(); ++m) {
    const auto& a = fs.factors[m];
    os << "#mode " << m << ' ' << a.rows() << '\n';
    write_rows(os, a.data(), a.rows(), a.cols());
  }
}

FactorSet read_factors(std::istream& is, const std::string& source) {
  LineReader in(is, source);
  std::string line;
  const auto h = header(in, line, "#factors");
  if (h.size() != 3) in.fail("expected '#factors K R'");
  const auto k = in.guard([&] { return text::parse_uint(h[1], "mode count"); });
  const auto r = in.guard([&] { return text::parse_uint(h[2], "rank"); });
  FactorSet fs;
  fs.rank = r;
  for (std::size_t m = 0; m < k; ++m) {
    const auto mh = header(in, line, "#mode");
    if (mh.size() != 3) in.fail("expected '#mode m N'");
    if (in.guard([&] { return text::parse_uint(mh[1], "mode"); }) != m) in.fail("modes out of order");
    const auto n = in.guard([&] { return text::parse_uint(mh[2], "row count"); });
    Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r));
    read_rows(in, a.data(), a.rows(), a.cols());
    fs.factors.push_back(std::move(a));
  }
  if (in.next(line)) in.fail("trailing content after last mode");
  in.guard([&] { fs.validate(); return 0; });
  return fs;
}

void write_model(std::ostream& os, const MGCNNModel& model) {
  os << "#mgcnn " << model.filters.size() << ' ' << model.cells.size() << ' ' << model.unroll << ' '
     << format_real(model.learning_rate) << ' ' << format_real(model.clip_norm) << '\n';
  auto block = [&](const std::string& name, const double* data, Eigen::Index rows, Eigen::Index cols) {
    os << "#param " << name << ' ' << rows << ' ' << cols << '\n';
    write_rows(os, data, rows, cols);
  };
  for (std::size_t m = 0; m < model.filters.size(); ++m) {
    const auto& c = model.filters[m].coeffs;
    block("filter." + std::to_string(m), c.data(), c.rows(), c.cols());
  }
  for (std::size_t i = 0; i < model.cells.size(); ++i) {
    const auto& c = model.cells[i];
    const std::string p = "cell." + std::to_string(i) + ".";
    block(p + "w_input", c.w_input.data(), c.w_input.rows(), c.w_input.cols());
    block(p + "w_hidden", c.w_hidden.data(), c.w_hidden.rows(), c.w_hidden.cols());
    block(p + "bias", c.bias.data(), c.bias.size(), 1);
    block(p + "w_out", c.w_out.data(), c.w_out.rows(), c.w_out.cols());
    block(p + "b_out", c.b_out.data(), c.b_out.size(), 1);
  }
}

MGCNNModel read_model(std::istream& is, const std::string& source) {
  LineReader in(is, source);
  std::string line;
  const auto h = header(in, line, "#mgcnn");
  if (h.size() != 6) in.fail("expected '#mgcnn filters cells unroll learning_rate clip_norm'");
  MGCNNModel model;
  const auto n_filters = in.guard([&] { return text::parse_uint(h[1], "filter count"); });
  const auto n_cells = in.guard([&] { return text::parse_uint(h[2], "cell count"); });
  model.unroll = in.guard([&] { return text::parse_uint(h[3], "unroll"); });
  model.learning_rate = in.guard([&] { return text::parse_real(h[4], "learning_rate"); });
  model.clip_norm = in.guard([&] { return text::parse_real(h[5], "clip_norm"); });

  auto block = [&](const std::string& name) -> Matrix {
    const auto ph = header(in, line, "#param");
    if (ph.size() != 4 || ph[1] != name) in.fail("expected '#param " + name + " rows cols'");
    const auto rows = in.guard([&] { return text::parse_uint(ph[2], "rows"); });
    const auto cols = in.guard([&] { return text::parse_uint(ph[3], "cols"); });
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    read_rows(in, m.data(), m.rows(), m.cols());
    return m;
  };
  auto column = [&](const std::string& name) -> Vector {
    const Matrix m = block(name);
    if (m.cols() != 1) in.fail(name + " must have one column");
    return Eigen::Map<const Vector>(m.data(), m.rows());
  };
  for (std::size_t m = 0; m < n_filters; ++m) model.filters.push_back({block("filter." + std::to_string(m))});
  for (std::size_t i = 0; i < n_cells; ++i) {
    const std::string p = "cell." + std::to_string(i) + ".";
    DiffusionCell c;
    c.w_input = block(p + "w_input");
    c.w_hidden = block(p + "w_hidden");
    c.bias = column(p + "bias");
    c.w_out = block(p + "w_out");
    c.b_out = column(p + "b_out");
    model.cells.push_back(std::move(c));
  }
  if (in.next(line)) in.fail("trailing content after last parameter");
  return model;
}

void save_relation(const std::filesystem::path& p, const SparseTensor& x) {
  auto os = open_out(p);
  write_relation(os, x);
}

SparseTensor load_relation(const std::filesystem::path& p) {
  auto is = open_in(p);
  return read_relation(is, p.string());
}

void save_graph(const std::filesystem::path& p, const IntraGraph& g) {
  auto os = open_out(p);
  write_graph(os, g);
}

IntraGraph load_graph(const std::filesystem::path& p) {
  auto is = open_in(p);
  return read_graph(is, p.string());
}

Matrix load_features(const std::filesystem::path& p) {
  auto is = open_in(p);
  return read_features(is, p.string());
}

void save_factors(const std::filesystem::path& p, const FactorSet& fs) {
  auto os = open_out(p);
  write_factors(os, fs);
}

FactorSet load_factors(const std::filesystem::path& p) {
  auto is = open_in(p);
  return read_factors(is, p.string());
}

void save_model(const std::filesystem::path& p, const MGCNNModel& model) {
  auto os = open_out(p);
  write_model(os, model);
}

MGCNNModel load_model(const std::filesystem::path& p) {
  auto is = open_in(p);
  return read_model(is, p.string());
}

std::string read_text(const std::filesystem::path& p) {
  auto is = open_in(p);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& p, const std::string& content) {
  auto os = open_out(p);
  os << content;
}

}  // namespace hyperlearn::io
