#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ianforge {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace cfgschema {

enum class Kind { Int, U64, F64, Bool, Str, Enum };

struct Key {
    const char* section;
    const char* key;
    Kind kind;
    const char* choices;  // pipe-separated, Enum only
};

// The full key schema; anything else is rejected at parse time.
inline const std::vector<Key>& keys() {
    static const std::vector<Key> k = {
        {"data", "mode", Kind::Enum, "points2d|image16"},
        {"data", "x", Kind::Str, nullptr},
        {"data", "y", Kind::Str, nullptr},
        {"model", "latent_dim", Kind::Int, nullptr},
        {"model", "g_hidden", Kind::Str, nullptr},
        {"model", "d_hidden", Kind::Str, nullptr},
        {"model", "t_hidden", Kind::Str, nullptr},
        {"model", "disc_variant", Kind::Enum, "classifier|autoencoder"},
        {"model", "comparator", Kind::Str, nullptr},
        {"model", "s_lo", Kind::Int, nullptr},
        {"model", "s_hi", Kind::Int, nullptr},
        {"train", "model", Kind::Enum, "vanilla|kgan|mx|perceptual"},
        {"train", "k", Kind::Int, nullptr},
        {"train", "mu_hi", Kind::F64, nullptr},
        {"train", "mu_lo", Kind::F64, nullptr},
        {"train", "lambda", Kind::F64, nullptr},
        {"train", "lr", Kind::F64, nullptr},
        {"train", "beta1", Kind::F64, nullptr},
        {"train", "beta2", Kind::F64, nullptr},
        {"train", "eps", Kind::F64, nullptr},
        {"train", "batch", Kind::Int, nullptr},
        {"train", "steps", Kind::Int, nullptr},
        {"train", "seed", Kind::U64, nullptr},
        {"train", "knn_mode", Kind::Enum, "nearest|random"},
        {"train", "mix_datasets", Kind::Bool, nullptr},
        {"train", "leaf_size", Kind::Int, nullptr},
        {"train", "clip_norm", Kind::F64, nullptr},
        {"train", "checkpoint_every", Kind::Int, nullptr},
        {"eval", "n_samples", Kind::Int, nullptr},
        {"eval", "n_noise", Kind::Int, nullptr},
        {"eval", "seed", Kind::U64, nullptr},
        {"eval", "classifier", Kind::Str, nullptr},
    };
    return k;
}

inline const Key* find(const std::string& section, const std::string& key) {
    for (const auto& k : keys())
        if (section == k.section && key == k.key) return &k;
    return nullptr;
}

}  // namespace cfgschema

// INI-style config: [section] headers, key = value lines, '#'/';' comments.
// Raw values are kept verbatim so parse -> serialize -> parse is a fixed
// point; typed accessors convert on demand.
class Config {
public:
    using Section = std::vector<std::pair<std::string, std::string>>;

    static Config parse(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']') throw ConfigError(where(lineno) + "unterminated section header");
                section = trim(t.substr(1, t.size() - 2));
                if (section.empty()) throw ConfigError(where(lineno) + "empty section name");
                cfg.section_ref(section);
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos) throw ConfigError(where(lineno) + "expected key = value");
            if (section.empty()) throw ConfigError(where(lineno) + "key outside any section");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty()) throw ConfigError(where(lineno) + "empty key");
            const auto* sk = cfgschema::find(section, key);
            if (!sk) throw ConfigError(where(lineno) + "unknown key [" + section + "] " + key);
            validate_value(*sk, value, lineno);
            auto& sec = cfg.section_ref(section);
            for (auto& [k, v] : sec) {
                if (k == key) throw ConfigError(where(lineno) + "duplicate key [" + section + "] " + key);
            }
            sec.emplace_back(key, value);
        }
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot read config '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    std::string serialize() const {
        std::string out;
        for (const auto& [name, sec] : sections_) {
            out += "[" + name + "]\n";
            for (const auto& [k, v] : sec) out += k + " = " + v + "\n";
        }
        return out;
    }

    std::string hash_hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(serialize())));
        return buf;
    }

    bool has(const std::string& section, const std::string& key) const {
        return raw(section, key) != nullptr;
    }

    std::string get_str(const std::string& s, const std::string& k) const { return need(s, k); }

    std::string get_str_or(const std::string& s, const std::string& k, const std::string& dflt) const {
        const std::string* v = raw(s, k);
        return v ? *v : dflt;
    }

    int get_int_or(const std::string& s, const std::string& k, int dflt) const {
        const std::string* v = raw(s, k);
        return v ? static_cast<int>(std::stoll(*v)) : dflt;
    }

    std::uint64_t get_u64_or(const std::string& s, const std::string& k, std::uint64_t dflt) const {
        const std::string* v = raw(s, k);
        return v ? static_cast<std::uint64_t>(std::stoull(*v)) : dflt;
    }

    double get_f64_or(const std::string& s, const std::string& k, double dflt) const {
        const std::string* v = raw(s, k);
        return v ? std::stod(*v) : dflt;
    }

    bool get_bool_or(const std::string& s, const std::string& k, bool dflt) const {
        const std::string* v = raw(s, k);
        if (!v) return dflt;
        return *v == "true" || *v == "1" || *v == "yes";
    }

private:
    static std::string where(int lineno) { return "config line " + std::to_string(lineno) + ": "; }

    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t");
        std::size_t e = s.find_last_not_of(" \t");
        return b == std::string::npos ? "" : s.substr(b, e - b + 1);
    }

    static void validate_value(const cfgschema::Key& k, const std::string& v, int lineno) {
        using cfgschema::Kind;
        try {
            std::size_t used = 0;
            switch (k.kind) {
                case Kind::Int:
                    (void)std::stoll(v, &used);
                    if (used != v.size()) throw std::invalid_argument(v);
                    break;
                case Kind::U64:
                    (void)std::stoull(v, &used);
                    if (used != v.size()) throw std::invalid_argument(v);
                    break;
                case Kind::F64:
                    (void)std::stod(v, &used);
                    if (used != v.size()) throw std::invalid_argument(v);
                    break;
                case Kind::Bool:
                    if (v != "true" && v != "false" && v != "0" && v != "1" && v != "yes" && v != "no")
                        throw std::invalid_argument(v);
                    break;
                case Kind::Str:
                    break;
                case Kind::Enum: {
                    const std::string choices = k.choices;
                    bool ok = false;
                    std::size_t pos = 0;
                    while (pos <= choices.size()) {
                        const auto bar = choices.find('|', pos);
                        const std::string c =
                            choices.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos);
                        if (v == c) ok = true;
                        if (bar == std::string::npos) break;
                        pos = bar + 1;
                    }
                    if (!ok) throw std::invalid_argument(v);
                    break;
                }
            }
        } catch (const std::exception&) {
            throw ConfigError(where(lineno) + "bad value '" + v + "' for [" + std::string(k.section) + "] " +
                              k.key);
        }
    }

    Section& section_ref(const std::string& name) {
        for (auto& [n, s] : sections_)
            if (n == name) return s;
        sections_.emplace_back(name, Section{});
        return sections_.back().second;
    }

    const std::string* raw(const std::string& section, const std::string& key) const {
        for (const auto& [n, s] : sections_) {
            if (n != section) continue;
            for (const auto& [k, v] : s)
                if (k == key) return &v;
        }
        return nullptr;
    }

    const std::string& need(const std::string& s, const std::string& k) const {
        const std::string* v = raw(s, k);
        if (!v) throw ConfigError("missing required key [" + s + "] " + k);
        return *v;
    }

    std::vector<std::pair<std::string, Section>> sections_;
};

}  // namespace ianforge
