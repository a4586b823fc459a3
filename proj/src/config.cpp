#include "egcm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace egcm {

namespace pt = boost::property_tree;

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i < s.size() && s[i] == '(') ++depth;
    if (i < s.size() && s[i] == ')') --depth;
    if (i == s.size() || (s[i] == sep && depth == 0)) {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + f(xs[i]);
  return out;
}

double to_double(const std::string& key, std::string_view s) {
  s = trim(s);
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw InputError("config " + key + ": not a number: '" + std::string(s) + "'");
  return v;
}

std::uint64_t to_uint(const std::string& key, std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
    throw InputError("config " + key + ": not a non-negative integer: '" + std::string(s) + "'");
  return v;
}

bool to_bool(const std::string& key, std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw InputError("config " + key + ": not a boolean: '" + std::string(s) + "'");
}

Ipv4 to_ip(const std::string& key, std::string_view s) {
  if (auto ip = Ipv4::parse(trim(s))) return *ip;
  throw InputError("config " + key + ": not an IPv4 address: '" + std::string(s) + "'");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"data.input", [](RunConfig& c, auto&, auto& v) { c.input = std::string(trim(v)); }},
      {"data.norm",
       [](RunConfig& c, auto& k, auto& v) {
         try {
           c.norm = parse_norm_method(trim(v));
         } catch (const std::exception& e) {
           throw InputError("config " + k + ": " + e.what());
         }
       }},
      {"data.remap_lo", [](RunConfig& c, auto& k, auto& v) { c.range.lo = to_ip(k, v); }},
      {"data.remap_hi", [](RunConfig& c, auto& k, auto& v) { c.range.hi = to_ip(k, v); }},
      {"data.split",
       [](RunConfig& c, auto& k, auto& v) {
         const auto parts = split_list(v);
         if (parts.size() != 3) throw InputError("config " + k + ": expected train, val, test fractions");
         c.fractions = {to_double(k, parts[0]), to_double(k, parts[1]), to_double(k, parts[2])};
       }},
      {"schema.src_ip", [](RunConfig& c, auto&, auto& v) { c.schema.src_ip = std::string(trim(v)); }},
      {"schema.src_port", [](RunConfig& c, auto&, auto& v) { c.schema.src_port = std::string(trim(v)); }},
      {"schema.dst_ip", [](RunConfig& c, auto&, auto& v) { c.schema.dst_ip = std::string(trim(v)); }},
      {"schema.dst_port", [](RunConfig& c, auto&, auto& v) { c.schema.dst_port = std::string(trim(v)); }},
      {"schema.label", [](RunConfig& c, auto&, auto& v) { c.schema.label = std::string(trim(v)); }},
      {"schema.features",
       [](RunConfig& c, auto& k, auto& v) {
         c.schema.features.clear();
         const auto parts = split_list(v);
         if (parts.size() == 1 && parts[0] == "*") return;
         for (const auto& p : parts) {
           try {
             c.schema.features.push_back(parse_feature_column(p));
           } catch (const InputError& e) {
             throw InputError("config " + k + ": " + e.what());
           }
         }
       }},
      {"schema.ignore", [](RunConfig& c, auto&, auto& v) { c.schema.ignored = split_list(v); }},
      {"model.layers", [](RunConfig& c, auto& k, auto& v) { c.train.model.num_layers = to_uint(k, v); }},
      {"model.hidden", [](RunConfig& c, auto& k, auto& v) { c.train.model.hidden_dim = to_uint(k, v); }},
      {"model.dropout", [](RunConfig& c, auto& k, auto& v) { c.train.model.dropout = to_double(k, v); }},
      {"model.fanout",
       [](RunConfig& c, auto& k, auto& v) {
         if (trim(v) == "all")
           c.train.model.fanout.reset();
         else
           c.train.model.fanout = to_uint(k, v);
       }},
      {"mixup.enabled", [](RunConfig& c, auto& k, auto& v) { c.train.enable_mixup = to_bool(k, v); }},
      {"mixup.alpha", [](RunConfig& c, auto& k, auto& v) { c.train.mixup.alpha = to_double(k, v); }},
      {"mixup.beta", [](RunConfig& c, auto& k, auto& v) { c.train.mixup.beta = to_double(k, v); }},
      {"mixup.sigma", [](RunConfig& c, auto& k, auto& v) { c.train.mixup.sigma = to_uint(k, v); }},
      {"contrastive.enabled", [](RunConfig& c, auto& k, auto& v) { c.train.enable_contrastive = to_bool(k, v); }},
      {"contrastive.gamma", [](RunConfig& c, auto& k, auto& v) { c.train.contrastive.gamma = to_uint(k, v); }},
      {"contrastive.theta", [](RunConfig& c, auto& k, auto& v) { c.train.contrastive.theta = to_double(k, v); }},
      {"train.epochs", [](RunConfig& c, auto& k, auto& v) { c.train.epochs = to_uint(k, v); }},
      {"train.lr", [](RunConfig& c, auto& k, auto& v) { c.train.lr = to_double(k, v); }},
      {"train.fraction", [](RunConfig& c, auto& k, auto& v) { c.train.train_fraction = to_double(k, v); }},
      {"train.seeds",
       [](RunConfig& c, auto& k, auto& v) {
         c.train.seeds.clear();
         for (const auto& s : split_list(v)) c.train.seeds.push_back(to_uint(k, s));
       }},
      {"run.seed", [](RunConfig& c, auto& k, auto& v) { c.seed = to_uint(k, v); }},
      {"run.out", [](RunConfig& c, auto&, auto& v) { c.out_dir = std::string(trim(v)); }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  schema.validate();
  if (range.hi.value < range.lo.value) throw InputError("config data.remap_hi is below data.remap_lo");
  const double sum = fractions.train + fractions.val + fractions.test;
  if (fractions.train <= 0 || fractions.val < 0 || fractions.test <= 0 || std::abs(sum - 1.0) > 1e-9)
    throw InputError("config data.split: fractions must be positive and sum to 1");
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

std::string format_feature_column(const FeatureColumn& c) {
  switch (c.kind) {
    case ColumnKind::kNumeric:
      return c.name;
    case ColumnKind::kIgnored:
      return c.name + ":ignored";
    case ColumnKind::kCategorical: {
      std::string s = c.name + ":categorical";
      if (!c.categories.empty()) {
        s += '(';
        for (std::size_t i = 0; i < c.categories.size(); ++i) s += (i ? "|" : "") + c.categories[i];
        s += ')';
      }
      return s;
    }
  }
  return c.name;
}

FeatureColumn parse_feature_column(std::string_view spec) {
  spec = trim(spec);
  FeatureColumn c;
  const auto colon = spec.find(':');
  c.name = std::string(trim(spec.substr(0, colon)));
  if (c.name.empty()) throw InputError("empty feature column name");
  if (colon == std::string_view::npos) return c;
  std::string_view kind = trim(spec.substr(colon + 1));
  if (kind == "numeric") return c;
  if (kind == "ignored") {
    c.kind = ColumnKind::kIgnored;
    return c;
  }
  if (kind.starts_with("categorical")) {
    c.kind = ColumnKind::kCategorical;
    kind.remove_prefix(std::string_view("categorical").size());
    kind = trim(kind);
    if (kind.empty()) return c;
    if (kind.front() != '(' || kind.back() != ')') throw InputError("bad categorical vocabulary in '" + std::string(spec) + "'");
    kind = kind.substr(1, kind.size() - 2);
    c.categories = split_list(kind, '|');
    return c;
  }
  throw InputError("unknown column kind in '" + std::string(spec) + "'");
}

std::string to_ini(const RunConfig& c) {
  const auto& t = c.train;
  std::ostringstream os;
  os << "[data]\n"
     << "input = " << c.input << '\n'
     << "norm = " << to_string(c.norm) << '\n'
     << "remap_lo = " << c.range.lo.to_string() << '\n'
     << "remap_hi = " << c.range.hi.to_string() << '\n'
     << "split = " << fmt(c.fractions.train) << ", " << fmt(c.fractions.val) << ", " << fmt(c.fractions.test) << "\n\n";
  os << "[schema]\n"
     << "src_ip = " << c.schema.src_ip << '\n'
     << "src_port = " << c.schema.src_port << '\n'
     << "dst_ip = " << c.schema.dst_ip << '\n'
     << "dst_port = " << c.schema.dst_port << '\n'
     << "label = " << c.schema.label << '\n'
     << "features = "
     << (c.schema.features.empty()
             ? std::string("*")
             : join<FeatureColumn>(c.schema.features, [](const FeatureColumn& f) { return format_feature_column(f); }))
     << '\n'
     << "ignore = " << join<std::string>(c.schema.ignored, [](const std::string& s) { return s; }) << "\n\n";
  os << "[model]\n"
     << "layers = " << t.model.num_layers << '\n'
     << "hidden = " << t.model.hidden_dim << '\n'
     << "dropout = " << fmt(t.model.dropout) << '\n'
     << "fanout = " << (t.model.fanout ? std::to_string(*t.model.fanout) : std::string("all")) << "\n\n";
  os << "[mixup]\n"
     << "enabled = " << (t.enable_mixup ? "true" : "false") << '\n'
     << "alpha = " << fmt(t.mixup.alpha) << '\n'
     << "beta = " << fmt(t.mixup.beta) << '\n'
     << "sigma = " << t.mixup.sigma << "\n\n";
  os << "[contrastive]\n"
     << "enabled = " << (t.enable_contrastive ? "true" : "false") << '\n'
     << "gamma = " << t.contrastive.gamma << '\n'
     << "theta = " << fmt(t.contrastive.theta) << "\n\n";
  os << "[train]\n"
     << "epochs = " << t.epochs << '\n'
     << "lr = " << fmt(t.lr) << '\n'
     << "seeds = " << join<std::uint64_t>(t.seeds, [](const std::uint64_t& s) { return std::to_string(s); }) << '\n'
     << "fraction = " << fmt(t.train_fraction) << "\n\n";
  os << "[run]\n"
     << "seed = " << c.seed << '\n'
     << "out = " << c.out_dir << '\n';
  return os.str();
}

RunConfig parse_ini(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw InputError("config: key outside a section: " + section);
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = setters().find(full);
      if (it == setters().end()) throw InputError("config: unknown key " + full);
      it->second(c, full, value.get_value<std::string>());
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ini(ss.str());
}

}  // namespace egcm
