#include "lpm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lpm/error.hpp"

namespace lpm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError("bad number '" + text + "' in " + what);
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  std::map<std::string, std::string> values;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const auto body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (values.count(key)) throw ConfigError("duplicate key '" + key + "'");
    values[key] = value;
  }
  return KeyValueConfig(std::move(values));
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void KeyValueConfig::check_keys(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string KeyValueConfig::get_string(const std::string& key, const std::optional<std::string>& fallback) const {
  const auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  if (fallback) return *fallback;
  throw ConfigError("missing required key '" + key + "'");
}

double KeyValueConfig::get_double(const std::string& key, std::optional<double> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + key + "'");
  }
  try {
    return parse_double(values_.at(key), key);
  } catch (const DataError&) {
    throw ConfigError("key '" + key + "' must be a number");
  }
}

long long KeyValueConfig::get_int(const std::string& key, std::optional<long long> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + key + "'");
  }
  const auto& text = values_.at(key);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw ConfigError("key '" + key + "' must be an integer");
  return v;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::optional<std::uint64_t> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + key + "'");
  }
  const auto& text = values_.at(key);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("key '" + key + "' must be a non-negative integer");
  }
  return v;
}

bool KeyValueConfig::get_bool(const std::string& key, std::optional<bool> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + key + "'");
  }
  const auto& v = values_.at(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "' must be a boolean");
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key,
                                              const std::optional<std::vector<int>>& fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + key + "'");
  }
  const auto& text = values_.at(key);
  auto to_int = [&](const std::string& s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("key '" + key + "' must list integers");
    return v;
  };
  std::vector<int> out;
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    const int lo = to_int(trim(text.substr(0, colon)));
    const int hi = to_int(trim(text.substr(colon + 1)));
    if (hi < lo) throw ConfigError("key '" + key + "' has an empty range");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
  } else {
    for (const auto& part : split(text, ',')) out.push_back(to_int(part));
  }
  if (out.empty()) throw ConfigError("key '" + key + "' is empty");
  return out;
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& part : split(get_string(key), ',')) {
    try {
      out.push_back(parse_double(part, key));
    } catch (const DataError&) {
      throw ConfigError("key '" + key + "' must list numbers");
    }
  }
  return out;
}

std::string KeyValueConfig::canonical() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + "=" + value + "\n";
  return out;
}

std::uint64_t KeyValueConfig::hash() const { return fnv1a64(canonical()); }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k, v >>= 4) out[static_cast<std::size_t>(k)] = digits[v & 0xf];
  return out;
}

std::string provenance_line(std::uint64_t seed, std::uint64_t config_hash) {
  return "# seed=" + std::to_string(seed) + " config_hash=" + hex64(config_hash) + "\n";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_posterior_csv(const PosteriorSample& sample, std::ostream& out) {
  out << "iteration,kind,index,dim,value\n";
  auto row = [&](std::size_t it, const char* kind, long long index, long long dim, double value) {
    out << it << ',' << kind << ',' << index << ',' << dim << ',' << format_double(value) << '\n';
  };
  for (const auto& draw : sample.draws) {
    const auto& s = draw.state;
    const auto& p = draw.params;
    const auto t = draw.iteration;
    for (Eigen::Index i = 0; i < s.positions.rows(); ++i) {
      for (Eigen::Index k = 0; k < s.positions.cols(); ++k) row(t, "position", i, k, s.positions(i, k));
    }
    row(t, "alpha", 0, 0, p.alpha);
    for (Eigen::Index k = 0; k < p.beta.size(); ++k) row(t, "beta", k, 0, p.beta[k]);
    if (sample.spec.free_scale) row(t, "beta1", 0, 0, p.beta1);
    for (Eigen::Index i = 0; i < s.sender.size(); ++i) row(t, "sociality", i, 0, s.sender[i]);
    for (Eigen::Index i = 0; i < s.receiver.size(); ++i) row(t, "sociality", i, 1, s.receiver[i]);
    if (sample.spec.has_sociality()) row(t, "sociality", -1, 0, p.sociality_variance);
    if (sample.spec.has_mixture()) {
      const auto& m = p.mixture;
      for (int g = 0; g < m.groups(); ++g) row(t, "lambda", g, 0, m.lambda[g]);
      for (int g = 0; g < m.groups(); ++g) {
        for (Eigen::Index k = 0; k < m.mu.cols(); ++k) row(t, "mu", g, k, m.mu(g, k));
      }
      for (int g = 0; g < m.groups(); ++g) row(t, "sigma2", g, 0, m.sigma2[g]);
      for (std::size_t i = 0; i < s.allocations.size(); ++i) {
        row(t, "allocation", static_cast<long long>(i), 0, s.allocations[i]);
      }
    }
  }
}

void write_posterior_csv(const PosteriorSample& sample, const std::filesystem::path& path,
                         const std::string& preamble) {
  auto out = open_out(path);
  out << preamble;
  write_posterior_csv(sample, out);
}

std::vector<NodeSummary> build_node_summaries(const Network& g, const PositionSummary& summary,
                                              const std::vector<int>* partition) {
  std::vector<NodeSummary> rows;
  const auto& pos = summary.mean.positions;
  for (std::size_t i = 0; i < g.size(); ++i) {
    NodeSummary r;
    const auto ii = static_cast<Eigen::Index>(i);
    r.node = i;
    r.label = g.labels()[i];
    for (Eigen::Index k = 0; k < pos.cols(); ++k) {
      r.mean.push_back(pos(ii, k));
      r.sd.push_back(summary.sd(ii, k));
    }
    const auto deg = degree(g, i);
    r.degree = static_cast<double>(g.directed() ? deg.in + deg.out : deg.out);
    if (summary.mean.sender.size() > 0) {
      double s = summary.mean.sender[ii];
      if (summary.mean.receiver.size() > 0) s = 0.5 * (s + summary.mean.receiver[ii]);
      r.sociality = s;
    }
    if (partition) r.cluster = (*partition)[i];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_summary_csv(const std::vector<NodeSummary>& rows, const std::filesystem::path& path,
                       const std::string& preamble) {
  auto out = open_out(path);
  out << preamble << "node,dim,mean,sd,label,degree,sociality,cluster\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.mean.size(); ++k) {
      out << r.node << ',' << k << ',' << format_double(r.mean[k]) << ',' << format_double(r.sd[k]) << ','
          << r.label << ',' << format_double(r.degree) << ',' << (r.sociality ? format_double(*r.sociality) : "")
          << ',' << (r.cluster ? std::to_string(*r.cluster) : "") << '\n';
    }
  }
}

std::vector<NodeSummary> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open summary " + path.string());
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    header = split(t, ',');
    break;
  }
  auto column = [&](const std::string& name, bool required) -> long {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw DataError("summary is missing column '" + name + "'");
      return -1;
    }
    return static_cast<long>(it - header.begin());
  };
  const long c_node = column("node", true), c_dim = column("dim", true), c_mean = column("mean", true);
  const long c_degree = column("degree", true);
  const long c_sd = column("sd", false), c_label = column("label", false);
  const long c_soc = column("sociality", false), c_cluster = column("cluster", false);

  std::map<std::size_t, NodeSummary> nodes;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = split(t, ',');
    if (f.size() != header.size()) throw DataError("summary row " + std::to_string(line_no) + " has wrong field count");
    const auto node = static_cast<std::size_t>(parse_double(f[static_cast<std::size_t>(c_node)], "node"));
    const auto dim = static_cast<std::size_t>(parse_double(f[static_cast<std::size_t>(c_dim)], "dim"));
    auto& r = nodes[node];
    r.node = node;
    if (r.mean.size() <= dim) {
      r.mean.resize(dim + 1, 0.0);
      r.sd.resize(dim + 1, 0.0);
    }
    r.mean[dim] = parse_double(f[static_cast<std::size_t>(c_mean)], "mean");
    if (c_sd >= 0) r.sd[dim] = parse_double(f[static_cast<std::size_t>(c_sd)], "sd");
    r.label = c_label >= 0 ? f[static_cast<std::size_t>(c_label)] : std::to_string(node);
    r.degree = parse_double(f[static_cast<std::size_t>(c_degree)], "degree");
    if (c_soc >= 0 && !f[static_cast<std::size_t>(c_soc)].empty()) {
      r.sociality = parse_double(f[static_cast<std::size_t>(c_soc)], "sociality");
    }
    if (c_cluster >= 0 && !f[static_cast<std::size_t>(c_cluster)].empty()) {
      r.cluster = static_cast<int>(parse_double(f[static_cast<std::size_t>(c_cluster)], "cluster"));
    }
  }
  if (nodes.empty()) throw DataError("summary contains no rows");
  std::vector<NodeSummary> out;
  for (auto& [k, v] : nodes) out.push_back(std::move(v));
  return out;
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path, const std::string& preamble) {
  auto out = open_out(path);
  out << preamble;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

void write_scan_csv(const std::vector<ModelScore>& scores, const std::filesystem::path& path,
                    const std::string& preamble) {
  auto out = open_out(path);
  out << preamble << "G,d,bic_likelihood,bic_mixture,bic_total,dic,seed,error\n";
  for (const auto& s : scores) {
    const auto num = [&](double v) { return s.ok ? format_double(v) : std::string("nan"); };
    std::string err = s.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << s.groups << ',' << s.dim << ',' << num(s.bic_likelihood) << ',' << num(s.bic_mixture) << ','
        << num(s.bic_total) << ',' << num(s.dic) << ',' << s.seed << ',' << err << '\n';
  }
}

void write_truth_csv(const Simulation& sim, const ModelSpec& spec, const std::filesystem::path& path,
                     const std::string& preamble) {
  auto out = open_out(path);
  out << preamble << "kind,index,dim,value\n";
  auto row = [&](const char* kind, long long index, long long dim, double value) {
    out << kind << ',' << index << ',' << dim << ',' << format_double(value) << '\n';
  };
  const auto& s = sim.state;
  for (Eigen::Index i = 0; i < s.positions.rows(); ++i) {
    for (Eigen::Index k = 0; k < s.positions.cols(); ++k) row("position", i, k, s.positions(i, k));
  }
  row("alpha", 0, 0, sim.params.alpha);
  for (Eigen::Index k = 0; k < sim.params.beta.size(); ++k) row("beta", k, 0, sim.params.beta[k]);
  if (spec.free_scale) row("beta1", 0, 0, sim.params.beta1);
  for (Eigen::Index i = 0; i < s.sender.size(); ++i) row("sociality", i, 0, s.sender[i]);
  for (Eigen::Index i = 0; i < s.receiver.size(); ++i) row("sociality", i, 1, s.receiver[i]);
  for (std::size_t i = 0; i < s.allocations.size(); ++i) row("allocation", static_cast<long long>(i), 0, s.allocations[i]);
}

namespace {

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_layout_svg(const std::vector<NodeSummary>& rows, const std::string& comment) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  constexpr double size = 600.0, margin = 40.0, r_min = 3.0, r_max = 14.0;
  auto coord = [](const NodeSummary& r, std::size_t k) { return k < r.mean.size() ? r.mean[k] : 0.0; };
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0, wmin = 0, wmax = 0;
  const bool social = !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.sociality.has_value(); });
  auto weight = [&](const NodeSummary& r) { return social ? *r.sociality : r.degree; };
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double x = coord(rows[k], 0), y = coord(rows[k], 1), w = weight(rows[k]);
    if (k == 0) {
      xmin = xmax = x;
      ymin = ymax = y;
      wmin = wmax = w;
    }
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
    wmin = std::min(wmin, w);
    wmax = std::max(wmax, w);
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
  const double scale = (size - 2 * margin) / span;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
      << size << ' ' << size << "\">\n";
  svg << "<!-- " << comment << " -->\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  char buf[256];
  for (const auto& r : rows) {
    const double cx = margin + (coord(r, 0) - xmin) * scale;
    const double cy = size - margin - (coord(r, 1) - ymin) * scale;
    const double frac = wmax > wmin ? (weight(r) - wmin) / (wmax - wmin) : 0.5;
    const double radius = r_min + frac * (r_max - r_min);
    const char* fill = r.cluster ? palette[static_cast<std::size_t>(std::abs(*r.cluster)) % 10] : "#4c72b0";
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"%s\" fill-opacity=\"0.8\" stroke=\"black\" "
                  "stroke-width=\"0.5\" data-node=\"%zu\">",
                  cx, cy, radius, fill, r.node);
    svg << buf << "<title>" << xml_escape(r.label) << "</title></circle>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace lpm
