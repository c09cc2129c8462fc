#include "qoie/model/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qoie::model {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.d_model = 512;
  c.heads = 8;
  c.n_e = 2;
  c.n_t = 4;
  c.n_c = 6;
  c.lambda = 3.0;
  c.vocab_size = 37000;
  return c;
}

blocks::BlockConfig ModelConfig::block() const {
  return {d_model, heads, ffn_width(), ln_eps, dropout};
}

void ModelConfig::validate() const {
  block().validate();
  if (d_model % 2 != 0) throw std::invalid_argument("d_model must be even for sinusoidal positions");
  if (n_e < 0 || n_t < 0 || n_c < 0) throw std::invalid_argument("layer counts must be >= 0");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (max_decode_len < 1) throw std::invalid_argument("max_decode_len must be >= 1");
  if (k_args < 1) throw std::invalid_argument("k_args must be >= 1");
  if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
}

void ModelConfig::apply(const std::string& key, const std::string& value) {
  if (key == "d_model") d_model = parse_number<int>(key, value);
  else if (key == "heads") heads = parse_number<int>(key, value);
  else if (key == "d_ff") d_ff = parse_number<int>(key, value);
  else if (key == "n_e") n_e = parse_number<int>(key, value);
  else if (key == "n_t") n_t = parse_number<int>(key, value);
  else if (key == "n_c") n_c = parse_number<int>(key, value);
  else if (key == "lambda") lambda = parse_number<double>(key, value);
  else if (key == "lr") lr = parse_number<double>(key, value);
  else if (key == "batch_size") batch_size = parse_number<int>(key, value);
  else if (key == "steps") steps = parse_number<int>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "use_question") use_question = parse_bool(key, value);
  else if (key == "semantic_tags") semantic_tags = parse_bool(key, value);
  else if (key == "max_decode_len") max_decode_len = parse_number<int>(key, value);
  else if (key == "k_args") k_args = parse_number<int>(key, value);
  else if (key == "vocab_size") vocab_size = parse_number<int>(key, value);
  else if (key == "ln_eps") ln_eps = parse_number<double>(key, value);
  else if (key == "dropout") dropout = parse_number<double>(key, value);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

ModelConfig ModelConfig::parse(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    c.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

std::map<std::string, std::string> ModelConfig::to_map() const {
  return {
      {"d_model", std::to_string(d_model)},
      {"heads", std::to_string(heads)},
      {"d_ff", std::to_string(ffn_width())},
      {"n_e", std::to_string(n_e)},
      {"n_t", std::to_string(n_t)},
      {"n_c", std::to_string(n_c)},
      {"lambda", format_double(lambda)},
      {"lr", format_double(lr)},
      {"batch_size", std::to_string(batch_size)},
      {"steps", std::to_string(steps)},
      {"seed", std::to_string(seed)},
      {"use_question", use_question ? "true" : "false"},
      {"semantic_tags", semantic_tags ? "true" : "false"},
      {"max_decode_len", std::to_string(max_decode_len)},
      {"k_args", std::to_string(k_args)},
      {"vocab_size", std::to_string(vocab_size)},
      {"ln_eps", format_double(ln_eps)},
      {"dropout", format_double(dropout)},
  };
}

std::string ModelConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_map()) out += k + " = " + v + "\n";
  return out;
}

}  // namespace qoie::model
