#include "imea/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace imea {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& v) {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument(v);
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw std::invalid_argument(v);
}

// Shortest text that parses back to the same value.
template <typename T>
std::string format_value(T v) {
    if constexpr (std::is_same_v<T, bool>) {
        return v ? "true" : "false";
    } else {
        char buf[32];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, ptr);
    }
}

using Setter = std::function<void(TrainConfig&, const std::string&)>;
using Getter = std::function<std::string(const TrainConfig&)>;

struct Key {
    Setter set;
    Getter get;
};

template <typename T>
Key field(T TrainConfig::*member) {
    return {[member](TrainConfig& c, const std::string& v) {
                if constexpr (std::is_same_v<T, bool>) {
                    c.*member = parse_bool(v);
                } else {
                    c.*member = parse_number<T>(v);
                }
            },
            [member](const TrainConfig& c) {
                return format_value(c.*member);
            }};
}

template <typename T>
Key informer_field(T InformerConfig::*member) {
    return {[member](TrainConfig& c, const std::string& v) {
                if constexpr (std::is_same_v<T, bool>) {
                    c.informer.*member = parse_bool(v);
                } else {
                    c.informer.*member = parse_number<T>(v);
                }
            },
            [member](const TrainConfig& c) {
                return format_value(c.informer.*member);
            }};
}

const std::map<std::string, Key>& keys() {
    static const std::map<std::string, Key> table = {
        {"dim", field(&TrainConfig::dim)},
        {"layers", field(&TrainConfig::layers)},
        {"heads", field(&TrainConfig::heads)},
        {"ffn", field(&TrainConfig::ffn)},
        {"n_neighbors", field(&TrainConfig::n_neighbors)},
        {"neighbor_samples", field(&TrainConfig::neighbor_samples)},
        {"path_len", field(&TrainConfig::path_len)},
        {"walks_per_entity", field(&TrainConfig::walks_per_entity)},
        {"swap_prob", field(&TrainConfig::swap_prob)},
        {"inverse_walks", field(&TrainConfig::inverse_walks)},
        {"batch_size", field(&TrainConfig::batch_size)},
        {"lr", field(&TrainConfig::lr)},
        {"epochs", field(&TrainConfig::epochs)},
        {"soft_label_s", field(&TrainConfig::soft_label_s)},
        {"lambda_rel", field(&TrainConfig::lambda_rel)},
        {"beta1", field(&TrainConfig::beta1)},
        {"beta2", field(&TrainConfig::beta2)},
        {"adam_eps", field(&TrainConfig::adam_eps)},
        {"negatives", field(&TrainConfig::negatives)},
        {"seed", field(&TrainConfig::seed)},
        {"informed", field(&TrainConfig::informed)},
        {"center_embeddings", field(&TrainConfig::center_embeddings)},
        {"holistic_start", field(&TrainConfig::holistic_start)},
        {"eval_every", field(&TrainConfig::eval_every)},
        {"patience", field(&TrainConfig::patience)},
        {"gamma_pos", informer_field(&InformerConfig::gamma_pos)},
        {"eta_floor",
         {[](TrainConfig& c, const std::string& v) { c.informer.match.eta_floor = parse_number<double>(v); },
          [](const TrainConfig& c) { return format_value(c.informer.match.eta_floor); }}},
        {"gamma_neg", informer_field(&InformerConfig::gamma_neg)},
        {"topk", informer_field(&InformerConfig::topk)},
        {"bidirectional_candidates", informer_field(&InformerConfig::bidirectional)},
        {"exclude_seed_candidates", informer_field(&InformerConfig::exclude_seed)},
        {"normalization",
         {[](TrainConfig& c, const std::string& v) {
              if (v == "softmax") {
                  c.normalization = Normalization::softmax;
              } else if (v == "linear") {
                  c.normalization = Normalization::linear;
              } else {
                  throw std::invalid_argument(v);
              }
          },
          [](const TrainConfig& c) {
              return std::string(c.normalization == Normalization::softmax ? "softmax" : "linear");
          }}},
    };
    return table;
}

}  // namespace

TrainConfig parse_config(const std::string& text, const std::string& origin) {
    TrainConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto where = origin + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(where + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        auto it = keys().find(key);
        if (it == keys().end()) throw ParseError(where + ": unknown key '" + key + "'");
        try {
            it->second.set(config, value);
        } catch (const std::invalid_argument&) {
            throw ParseError(where + ": bad value '" + value + "' for " + key);
        }
    }
    config.validate();
    return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("missing file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::string format_config(const TrainConfig& config) {
    std::ostringstream out;
    for (const auto& [name, key] : keys()) out << name << " = " << key.get(config) << '\n';
    return out.str();
}

}  // namespace imea
