#include "corl/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "corl/data.hpp"

namespace corl {

namespace {

struct Field {
    std::string key;
    std::function<std::string(const TrainConfig&)> get;
    std::function<void(TrainConfig&, const std::string&)> set;
};

template <typename T>
T parse_num(const std::string& key, const std::string& v);

template <>
double parse_num<double>(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double d;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: " + v);
    }
    if (pos != v.size()) throw ConfigError("config key '" + key + "': trailing junk: " + v);
    return d;
}

template <>
int parse_num<int>(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long d;
    try {
        d = std::stol(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not an integer: " + v);
    }
    if (pos != v.size()) throw ConfigError("config key '" + key + "': trailing junk: " + v);
    return static_cast<int>(d);
}

template <>
std::uint64_t parse_num<std::uint64_t>(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    unsigned long long d;
    try {
        d = std::stoull(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not an unsigned integer: " + v);
    }
    if (pos != v.size()) throw ConfigError("config key '" + key + "': trailing junk: " + v);
    return d;
}

const std::vector<Field>& fields() {
    auto dget = [](double TrainConfig::* m) {
        return [m](const TrainConfig& c) { return format_double(c.*m); };
    };
    auto dset = [](double TrainConfig::* m) {
        return [m](TrainConfig& c, const std::string& v) { c.*m = parse_num<double>("", v); };
    };
    auto iget = [](int TrainConfig::* m) {
        return [m](const TrainConfig& c) { return std::to_string(c.*m); };
    };
    auto iset = [](int TrainConfig::* m) {
        return [m](TrainConfig& c, const std::string& v) { c.*m = parse_num<int>("", v); };
    };
    static const std::vector<Field> f = {
        {"gamma", dget(&TrainConfig::gamma), dset(&TrainConfig::gamma)},
        {"h", iget(&TrainConfig::h), iset(&TrainConfig::h)},
        {"alpha", dget(&TrainConfig::alpha), dset(&TrainConfig::alpha)},
        {"tau", dget(&TrainConfig::tau), dset(&TrainConfig::tau)},
        {"lr_actor", dget(&TrainConfig::lr_actor), dset(&TrainConfig::lr_actor)},
        {"lr_critic", dget(&TrainConfig::lr_critic), dset(&TrainConfig::lr_critic)},
        {"batch_size", iget(&TrainConfig::batch_size), iset(&TrainConfig::batch_size)},
        {"bc_steps", iget(&TrainConfig::bc_steps), iset(&TrainConfig::bc_steps)},
        {"rl_steps", iget(&TrainConfig::rl_steps), iset(&TrainConfig::rl_steps)},
        {"actor_delay", iget(&TrainConfig::actor_delay), iset(&TrainConfig::actor_delay)},
        {"noise_scale", dget(&TrainConfig::noise_scale), dset(&TrainConfig::noise_scale)},
        {"n_ood", iget(&TrainConfig::n_ood), iset(&TrainConfig::n_ood)},
        {"eval_every", iget(&TrainConfig::eval_every), iset(&TrainConfig::eval_every)},
        {"seed", [](const TrainConfig& c) { return std::to_string(c.seed); },
         [](TrainConfig& c, const std::string& v) { c.seed = parse_num<std::uint64_t>("seed", v); }},
        {"critic_width", iget(&TrainConfig::critic_width), iset(&TrainConfig::critic_width)},
        {"critic_blocks", iget(&TrainConfig::critic_blocks), iset(&TrainConfig::critic_blocks)},
        {"actor_hidden", iget(&TrainConfig::actor_hidden), iset(&TrainConfig::actor_hidden)},
        {"actor_layers", iget(&TrainConfig::actor_layers), iset(&TrainConfig::actor_layers)},
        {"eval_trials", iget(&TrainConfig::eval_trials), iset(&TrainConfig::eval_trials)},
        {"log_every", iget(&TrainConfig::log_every), iset(&TrainConfig::log_every)},
    };
    return f;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

const std::vector<std::string>& TrainConfig::known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& f : fields()) k.push_back(f.key);
        return k;
    }();
    return keys;
}

void TrainConfig::validate() const {
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in [0,1)");
    if (tau <= 0.0 || tau > 1.0) throw ConfigError("tau must be in (0,1]");
    if (h < 1) throw ConfigError("h must be >= 1");
    if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
    if (lr_actor <= 0.0 || lr_critic <= 0.0) throw ConfigError("learning rates must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (bc_steps < 0 || rl_steps < 0) throw ConfigError("step counts must be >= 0");
    if (actor_delay < 1) throw ConfigError("actor_delay must be >= 1");
    if (noise_scale < 0.0) throw ConfigError("noise_scale must be >= 0");
    if (n_ood < 1) throw ConfigError("n_ood must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (critic_width < 1 || critic_blocks < 1) throw ConfigError("critic size must be positive");
    if (actor_hidden < 1 || actor_layers < 1) throw ConfigError("actor size must be positive");
    if (eval_trials < 1) throw ConfigError("eval_trials must be >= 1");
    if (log_every < 1) throw ConfigError("log_every must be >= 1");
}

std::string TrainConfig::serialize() const {
    std::ostringstream os;
    for (const auto& f : fields()) os << f.key << " = " << f.get(*this) << "\n";
    return os.str();
}

void TrainConfig::apply_override(const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (f.key == key) {
            try {
                f.set(*this, trim(value));
            } catch (const ConfigError&) {
                throw ConfigError("config key '" + key + "': bad value: " + value);
            }
            return;
        }
    }
    std::string valid;
    for (const auto& k : known_keys()) valid += (valid.empty() ? "" : ", ") + k;
    throw ConfigError("unknown config key '" + key + "'; valid keys: " + valid);
}

TrainConfig TrainConfig::parse_text(const std::string& text) {
    TrainConfig c;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        c.apply_override(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    c.validate();
    return c;
}

TrainConfig TrainConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_text(buf.str());
}

}  // namespace corl
