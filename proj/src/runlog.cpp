#include "fgsf/runlog.hpp"

#include "fgsf/error.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fgsf::harness {

std::string format_double(double v) {
    char buf[40];
    // %.17g round-trips any double; trim to the shortest exact form.
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v || (v != v && back != back)) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

RunLogWriter::RunLogWriter(const std::string& path)
    : path_(path), tmp_path_(path + ".tmp") {
    FILE* f = std::fopen(tmp_path_.c_str(), "w");
    if (!f) throw Error(ErrorKind::Io, "cannot open " + tmp_path_);
    file_ = f;
    std::fputs(kRunLogHeader, f);
    std::fputc('\n', f);
}

RunLogWriter::~RunLogWriter() {
    if (file_) std::fclose(static_cast<FILE*>(file_));
    if (!finalized_) std::remove(tmp_path_.c_str());
}

void RunLogWriter::append(const RunLogRow& r) {
    if (!file_) throw Error(ErrorKind::Io, "runlog already finalized");
    FILE* f = static_cast<FILE*>(file_);
    std::fprintf(f, "%ld,%s,%s,%s,%s,%s,%s,%s,%s,%ld\n", r.step,
                 format_double(r.episode_return).c_str(),
                 format_double(r.tr_f_actor).c_str(),
                 format_double(r.tr_f_critic).c_str(),
                 format_double(r.dormant_actor).c_str(),
                 format_double(r.dormant_critic).c_str(),
                 format_double(r.kl_actor).c_str(),
                 format_double(r.kl_critic).c_str(),
                 format_double(r.alpha).c_str(), r.wall_ms);
    std::fflush(f);
}

void RunLogWriter::finalize() {
    if (finalized_) return;
    if (file_) {
        std::fclose(static_cast<FILE*>(file_));
        file_ = nullptr;
    }
    if (std::rename(tmp_path_.c_str(), path_.c_str()) != 0)
        throw Error(ErrorKind::Io, "cannot rename " + tmp_path_ + " to " + path_);
    finalized_ = true;
}

RunLogData read_runlog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    std::string header;
    if (!std::getline(in, header))
        throw Error(ErrorKind::Io, "empty log: " + path);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != kRunLogHeader)
        throw Error(ErrorKind::Config, "log header mismatch in " + path +
                    " (got: " + header + ")");
    RunLogData data;
    std::string line;
    long prev_step = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 10)
            throw Error(ErrorKind::Config, "malformed log row: " + line);
        RunLogRow r;
        r.step = std::stol(fields[0]);
        r.episode_return = std::stod(fields[1]);
        r.tr_f_actor = std::stod(fields[2]);
        r.tr_f_critic = std::stod(fields[3]);
        r.dormant_actor = std::stod(fields[4]);
        r.dormant_critic = std::stod(fields[5]);
        r.kl_actor = std::stod(fields[6]);
        r.kl_critic = std::stod(fields[7]);
        r.alpha = std::stod(fields[8]);
        r.wall_ms = std::stol(fields[9]);
        if (r.step <= prev_step)
            throw Error(ErrorKind::Config, "log steps not strictly increasing");
        prev_step = r.step;
        data.rows.push_back(r);
    }
    return data;
}

} // namespace fgsf::harness
