#include "fgsf/checkpoint.hpp"

#include "fgsf/error.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>

namespace fgsf::harness {

namespace {

constexpr char kMagic[4] = {'F', 'G', 'S', 'F'};
constexpr uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path) {
        f_ = std::fopen(path.c_str(), "wb");
        if (!f_) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
    }
    ~Writer() {
        if (f_) std::fclose(f_);
    }
    void close() {
        if (f_ && std::fclose(f_) != 0) {
            f_ = nullptr;
            throw Error(ErrorKind::Io, "write failure on " + path_);
        }
        f_ = nullptr;
    }

    void bytes(const void* p, size_t n) {
        if (std::fwrite(p, 1, n, f_) != n)
            throw Error(ErrorKind::Io, "write failure on " + path_);
    }
    void u8(uint8_t v) { bytes(&v, 1); }
    void u32(uint32_t v) {
        uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
        bytes(b, 4);
    }
    void u64(uint64_t v) {
        uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
        bytes(b, 8);
    }
    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void f64_vec(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }

private:
    std::string path_;
    FILE* f_ = nullptr;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path) {
        f_ = std::fopen(path.c_str(), "rb");
        if (!f_) throw Error(ErrorKind::Io, "cannot open " + path);
    }
    ~Reader() {
        if (f_) std::fclose(f_);
    }

    void bytes(void* p, size_t n) {
        if (std::fread(p, 1, n, f_) != n)
            throw Error(ErrorKind::TruncatedPayload, "truncated checkpoint: " + path_);
    }
    uint8_t u8() {
        uint8_t v;
        bytes(&v, 1);
        return v;
    }
    uint32_t u32() {
        uint8_t b[4];
        bytes(b, 4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
        return v;
    }
    uint64_t u64() {
        uint8_t b[8];
        bytes(b, 8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
        return v;
    }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        uint32_t n = u32();
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    std::vector<double> f64_vec() {
        uint64_t n = u64();
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }

private:
    std::string path_;
    FILE* f_ = nullptr;
};

void write_matrix(Writer& w, const ndmath::Matrix& m) {
    w.u32(static_cast<uint32_t>(m.rows));
    w.u32(static_cast<uint32_t>(m.cols));
    for (double v : m.data) w.f64(v);
}

ndmath::Matrix read_matrix(Reader& r) {
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    ndmath::Matrix m(rows, cols);
    for (auto& v : m.data) v = r.f64();
    return m;
}

void write_mlp(Writer& w, const std::string& name, const ndmath::Mlp& net) {
    w.str(name);
    w.u32(static_cast<uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        w.u8(static_cast<uint8_t>(l.act));
        write_matrix(w, l.wb);
    }
}

void read_mlp_into(Reader& r, const std::string& name, ndmath::Mlp& net) {
    const std::string got = r.str();
    if (got != name)
        throw Error(ErrorKind::TruncatedPayload,
                    "checkpoint network order mismatch: expected " + name + ", got " + got);
    const uint32_t layers = r.u32();
    if (layers != net.layers.size())
        throw Error(ErrorKind::VersionMismatch,
                    "checkpoint shape table mismatch for " + name);
    for (auto& l : net.layers) {
        l.act = static_cast<ndmath::Activation>(r.u8());
        ndmath::Matrix m = read_matrix(r);
        if (m.rows != l.wb.rows || m.cols != l.wb.cols)
            throw Error(ErrorKind::VersionMismatch,
                        "checkpoint layer shape mismatch for " + name);
        l.wb = std::move(m);
    }
}

void write_adam(Writer& w, const sac::AdamState& s) {
    w.i64(s.t);
    w.u32(static_cast<uint32_t>(s.m.size()));
    for (size_t i = 0; i < s.m.size(); ++i) {
        write_matrix(w, s.m[i]);
        write_matrix(w, s.v[i]);
    }
}

void read_adam_into(Reader& r, sac::AdamState& s) {
    s.t = r.i64();
    const uint32_t n = r.u32();
    if (n != s.m.size())
        throw Error(ErrorKind::VersionMismatch, "checkpoint optimizer shape mismatch");
    for (size_t i = 0; i < n; ++i) {
        s.m[i] = read_matrix(r);
        s.v[i] = read_matrix(r);
    }
}

} // namespace

void save_checkpoint(const std::string& path, const RunConfig& cfg,
                     sac::TrainLoop& loop, const MetricsState& metrics,
                     long wall_elapsed_ms) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    w.str(cfg.to_ini());

    auto& agent = loop.agent();
    write_mlp(w, "policy", agent.policy.net);
    write_mlp(w, "q1", agent.critic.q1);
    write_mlp(w, "q2", agent.critic.q2);
    write_mlp(w, "target_q1", agent.target_critic.q1);
    write_mlp(w, "target_q2", agent.target_critic.q2);

    write_adam(w, agent.opt_policy);
    write_adam(w, agent.opt_q1);
    write_adam(w, agent.opt_q2);
    w.f64(agent.log_alpha);
    w.f64(agent.opt_alpha.m);
    w.f64(agent.opt_alpha.v);
    w.i64(agent.opt_alpha.t);

    auto streams = loop.streams().named();
    w.u32(static_cast<uint32_t>(streams.size()));
    for (auto& [name, rng] : streams) {
        w.str(name);
        for (uint64_t word : rng->state()) w.u64(word);
    }

    const auto& buf = loop.buffer();
    w.u64(buf.capacity());
    w.u64(buf.size());
    w.u64(buf.write_cursor());
    const uint32_t obs_dim = static_cast<uint32_t>(loop.environment().obs_dim());
    const uint32_t act_dim = static_cast<uint32_t>(loop.environment().action_dim());
    w.u32(obs_dim);
    w.u32(act_dim);
    for (size_t i = 0; i < buf.size(); ++i) {
        const auto& t = buf.at(i);
        for (double v : t.obs) w.f64(v);
        for (double v : t.action) w.f64(v);
        w.f64(t.reward);
        for (double v : t.next_obs) w.f64(v);
        w.u8(t.done ? 1 : 0);
    }

    w.str(loop.environment().name());
    w.f64_vec(loop.environment().state_blob());

    w.i64(loop.env_steps());
    w.i64(loop.grad_steps());
    w.i64(loop.episodes());
    w.f64_vec(loop.current_obs());
    w.f64(loop.episode_return_acc());
    w.i64(loop.episode_len());
    w.f64(loop.last_episode_return());

    w.u8(metrics.have_snapshots ? 1 : 0);
    w.f64_vec(metrics.actor_snapshot);
    w.f64_vec(metrics.critic_snapshot);
    w.f64(metrics.dormant_actor);
    w.f64(metrics.dormant_critic);
    w.f64(metrics.kl_actor);
    w.f64(metrics.kl_critic);
    w.i64(metrics.last_metric_step);

    w.i64(wall_elapsed_ms);
    w.close();
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw Error(ErrorKind::BadMagic, "bad magic in " + path);
    const uint32_t version = r.u32();
    if (version != kVersion)
        throw Error(ErrorKind::VersionMismatch,
                    "checkpoint version " + std::to_string(version) +
                    " unsupported (expected " + std::to_string(kVersion) + ")");

    LoadedCheckpoint lc;
    lc.cfg = config_from_ini(r.str());
    lc.cfg.validate();

    lc.loop = std::make_unique<sac::TrainLoop>(
        env::make_env(lc.cfg.env_name), lc.cfg.sac_cfg, lc.cfg.method, lc.cfg.scrub,
        lc.cfg.effective_reset_interval(), lc.cfg.seed);
    auto& loop = *lc.loop;
    auto& agent = loop.agent();

    read_mlp_into(r, "policy", agent.policy.net);
    read_mlp_into(r, "q1", agent.critic.q1);
    read_mlp_into(r, "q2", agent.critic.q2);
    read_mlp_into(r, "target_q1", agent.target_critic.q1);
    read_mlp_into(r, "target_q2", agent.target_critic.q2);

    read_adam_into(r, agent.opt_policy);
    read_adam_into(r, agent.opt_q1);
    read_adam_into(r, agent.opt_q2);
    agent.log_alpha = r.f64();
    agent.opt_alpha.m = r.f64();
    agent.opt_alpha.v = r.f64();
    agent.opt_alpha.t = r.i64();

    const uint32_t n_streams = r.u32();
    auto streams = loop.streams().named();
    if (n_streams != streams.size())
        throw Error(ErrorKind::VersionMismatch, "checkpoint stream table mismatch");
    for (auto& [name, rng] : streams) {
        const std::string got = r.str();
        if (got != name)
            throw Error(ErrorKind::VersionMismatch, "checkpoint stream order mismatch");
        for (auto& word : rng->state()) word = r.u64();
    }

    const uint64_t capacity = r.u64();
    const uint64_t size = r.u64();
    const uint64_t cursor = r.u64();
    const uint32_t obs_dim = r.u32();
    const uint32_t act_dim = r.u32();
    if (capacity != loop.buffer().capacity())
        throw Error(ErrorKind::VersionMismatch, "checkpoint buffer capacity mismatch");
    auto& storage = loop.buffer().storage();
    storage.clear();
    storage.reserve(size);
    for (uint64_t i = 0; i < size; ++i) {
        sac::Transition t;
        t.obs.resize(obs_dim);
        for (auto& v : t.obs) v = r.f64();
        t.action.resize(act_dim);
        for (auto& v : t.action) v = r.f64();
        t.reward = r.f64();
        t.next_obs.resize(obs_dim);
        for (auto& v : t.next_obs) v = r.f64();
        t.done = r.u8() != 0;
        storage.push_back(std::move(t));
    }
    loop.buffer().restore_counters(size, cursor);

    const std::string env_name = r.str();
    if (env_name != loop.environment().name())
        throw Error(ErrorKind::VersionMismatch, "checkpoint environment mismatch");
    loop.environment().restore_blob(r.f64_vec());

    loop.env_steps_ref() = r.i64();
    loop.grad_steps_ref() = r.i64();
    loop.episodes_ref() = r.i64();
    loop.current_obs() = r.f64_vec();
    loop.episode_return_acc() = r.f64();
    loop.episode_len() = static_cast<int>(r.i64());
    loop.last_episode_return_ref() = r.f64();

    lc.metrics.have_snapshots = r.u8() != 0;
    lc.metrics.actor_snapshot = r.f64_vec();
    lc.metrics.critic_snapshot = r.f64_vec();
    lc.metrics.dormant_actor = r.f64();
    lc.metrics.dormant_critic = r.f64();
    lc.metrics.kl_actor = r.f64();
    lc.metrics.kl_critic = r.f64();
    lc.metrics.last_metric_step = r.i64();

    lc.wall_elapsed_ms = r.i64();
    return lc;
}

} // namespace fgsf::harness
