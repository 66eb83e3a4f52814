#pragma once

#include <string>
#include <vector>

namespace fgsf::harness {

// Exact schema of the per-step CSV.
inline constexpr const char* kRunLogHeader =
    "step,episode_return,tr_f_actor,tr_f_critic,dormant_actor,dormant_critic,"
    "kl_actor,kl_critic,alpha,wall_ms";

struct RunLogRow {
    long step = 0;
    double episode_return = 0.0;
    double tr_f_actor = 0.0;
    double tr_f_critic = 0.0;
    double dormant_actor = 0.0;
    double dormant_critic = 0.0;
    double kl_actor = 0.0;
    double kl_critic = 0.0;
    double alpha = 0.0;
    long wall_ms = 0;
};

// Rows stream to <path>.tmp; finalize() renames atomically onto <path>.
class RunLogWriter {
public:
    explicit RunLogWriter(const std::string& path);
    ~RunLogWriter();
    void append(const RunLogRow& row);
    void finalize();
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::string tmp_path_;
    void* file_ = nullptr; // FILE*
    bool finalized_ = false;
};

struct RunLogData {
    std::vector<RunLogRow> rows;
};

// Parses and validates the schema; rejects unknown headers.
RunLogData read_runlog(const std::string& path);

std::string format_double(double v); // shortest round-trip text

} // namespace fgsf::harness
