#include "fgsf/config.hpp"

#include "fgsf/error.hpp"

#include <algorithm>
#include <sstream>

namespace fgsf::harness {

void RunConfig::validate() const {
    sac_cfg.validate();
    scrub.validate();
    if (scrub.estimator == fim::EstimatorKind::DenseOracle)
        throw Error(ErrorKind::Config,
                    "dense estimator is a test oracle; runs use diag|kfac|ekfac");
    if (env_name != "pendulum" && env_name != "shifting_goal")
        throw Error(ErrorKind::Config, "unknown environment: " + env_name);
    if (total_env_steps < 1)
        throw Error(ErrorKind::Config, "total_env_steps must be positive");
    if (eval_every < 1 || eval_episodes < 1)
        throw Error(ErrorKind::Config, "eval settings must be positive");
    if (log_every < 1 || metrics_every < 1)
        throw Error(ErrorKind::Config, "log settings must be positive");
    if (reset_interval < 0)
        throw Error(ErrorKind::Config, "reset_interval must be >= 0");
    if (checkpoint_at < 0 || checkpoint_at > total_env_steps)
        throw Error(ErrorKind::Config, "checkpoint_at out of range");
}

long RunConfig::effective_reset_interval() const {
    if (reset_interval > 0) return reset_interval;
    // Five resets per run, mirroring one reset per fifth of training.
    const long updates = sac_cfg.replay_ratio *
        std::max<long>(1, total_env_steps - sac_cfg.warmup_steps);
    return std::max<long>(1, updates / 5);
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

long to_long(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long r = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "bad integer for " + key + ": " + v);
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "bad number for " + key + ": " + v);
    }
}

} // namespace

std::map<std::string, std::string> parse_ini(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line, section;
    while (std::getline(is, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Config, "config line missing '=': " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw Error(ErrorKind::Config, "config line missing key: " + line);
        kv[section.empty() ? key : section + "." + key] = value;
    }
    return kv;
}

void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "run.env" || key == "env") cfg.env_name = value;
    else if (key == "run.method" || key == "method") cfg.method = sac::method_from_name(value);
    else if (key == "run.steps" || key == "steps") cfg.total_env_steps = to_long(key, value);
    else if (key == "run.eval_every") cfg.eval_every = to_long(key, value);
    else if (key == "run.eval_episodes") cfg.eval_episodes = static_cast<int>(to_long(key, value));
    else if (key == "run.log_every") cfg.log_every = to_long(key, value);
    else if (key == "run.metrics_every") cfg.metrics_every = to_long(key, value);
    else if (key == "run.reset_interval") cfg.reset_interval = to_long(key, value);
    else if (key == "run.seed" || key == "seed") cfg.seed = static_cast<uint64_t>(to_long(key, value));
    else if (key == "run.out" || key == "out") cfg.out_dir = value;
    else if (key == "run.checkpoint_at") cfg.checkpoint_at = to_long(key, value);
    else if (key == "sac.gamma") cfg.sac_cfg.gamma = to_double(key, value);
    else if (key == "sac.tau") cfg.sac_cfg.tau = to_double(key, value);
    else if (key == "sac.learning_rate") cfg.sac_cfg.learning_rate = to_double(key, value);
    else if (key == "sac.batch_size") cfg.sac_cfg.batch_size = static_cast<int>(to_long(key, value));
    else if (key == "sac.warmup_steps") cfg.sac_cfg.warmup_steps = static_cast<int>(to_long(key, value));
    else if (key == "sac.target_entropy") cfg.sac_cfg.target_entropy = to_double(key, value);
    else if (key == "sac.replay_ratio") cfg.sac_cfg.replay_ratio = static_cast<int>(to_long(key, value));
    else if (key == "sac.hidden_units") cfg.sac_cfg.hidden_units = static_cast<int>(to_long(key, value));
    else if (key == "sac.hidden_layers") cfg.sac_cfg.hidden_layers = static_cast<int>(to_long(key, value));
    else if (key == "sac.activation") {
        if (value == "tanh") cfg.sac_cfg.activation = ndmath::Activation::Tanh;
        else if (value == "relu") cfg.sac_cfg.activation = ndmath::Activation::Relu;
        else throw Error(ErrorKind::Config, "unknown activation: " + value);
    }
    else if (key == "sac.init_log_alpha") cfg.sac_cfg.init_log_alpha = to_double(key, value);
    else if (key == "sac.buffer_capacity") cfg.sac_cfg.buffer_capacity = static_cast<size_t>(to_long(key, value));
    else if (key == "scrub.lambda") cfg.scrub.lambda = to_double(key, value);
    else if (key == "scrub.sigma_sq") cfg.scrub.sigma_sq = to_double(key, value);
    else if (key == "scrub.frequency") cfg.scrub.frequency = static_cast<int>(to_long(key, value));
    else if (key == "scrub.target") cfg.scrub.target = fim::target_from_name(value);
    else if (key == "scrub.damping") cfg.scrub.damping = to_double(key, value);
    else if (key == "scrub.estimator") cfg.scrub.estimator = fim::estimator_from_name(value);
    else throw Error(ErrorKind::Config, "unknown config key: " + key);
}

RunConfig config_from_ini(const std::string& text) {
    RunConfig cfg;
    for (const auto& [k, v] : parse_ini(text)) apply_kv(cfg, k, v);
    return cfg;
}

std::string RunConfig::to_ini() const {
    std::ostringstream os;
    os.precision(17);
    os << "[run]\n";
    os << "env = " << env_name << "\n";
    os << "method = " << sac::method_name(method) << "\n";
    os << "steps = " << total_env_steps << "\n";
    os << "eval_every = " << eval_every << "\n";
    os << "eval_episodes = " << eval_episodes << "\n";
    os << "log_every = " << log_every << "\n";
    os << "metrics_every = " << metrics_every << "\n";
    os << "reset_interval = " << reset_interval << "\n";
    os << "seed = " << seed << "\n";
    os << "checkpoint_at = " << checkpoint_at << "\n";
    os << "\n[sac]\n";
    os << "gamma = " << sac_cfg.gamma << "\n";
    os << "tau = " << sac_cfg.tau << "\n";
    os << "learning_rate = " << sac_cfg.learning_rate << "\n";
    os << "batch_size = " << sac_cfg.batch_size << "\n";
    os << "warmup_steps = " << sac_cfg.warmup_steps << "\n";
    os << "target_entropy = " << sac_cfg.target_entropy << "\n";
    os << "replay_ratio = " << sac_cfg.replay_ratio << "\n";
    os << "hidden_units = " << sac_cfg.hidden_units << "\n";
    os << "hidden_layers = " << sac_cfg.hidden_layers << "\n";
    os << "activation = "
       << (sac_cfg.activation == ndmath::Activation::Relu ? "relu" : "tanh") << "\n";
    os << "init_log_alpha = " << sac_cfg.init_log_alpha << "\n";
    os << "buffer_capacity = " << sac_cfg.buffer_capacity << "\n";
    os << "\n[scrub]\n";
    os << "lambda = " << scrub.lambda << "\n";
    os << "sigma_sq = " << scrub.sigma_sq << "\n";
    os << "frequency = " << scrub.frequency << "\n";
    os << "target = " << fim::target_name(scrub.target) << "\n";
    os << "damping = " << scrub.damping << "\n";
    os << "estimator = " << fim::estimator_name(scrub.estimator) << "\n";
    return os.str();
}

} // namespace fgsf::harness
