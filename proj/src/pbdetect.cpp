#include "fgsf/pbdetect.hpp"

#include "fgsf/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fgsf::pbdetect {

void TraceSeries::validate() const {
    if (steps.size() != values.size())
        throw Error(ErrorKind::DimMismatch, "trace series: steps/values length mismatch");
    for (size_t i = 1; i < steps.size(); ++i)
        if (!(steps[i] > steps[i - 1]))
            throw Error(ErrorKind::InvalidArgument, "trace series: steps not increasing");
}

void SavGolSpec::validate() const {
    if (window < 5 || window % 2 == 0)
        throw Error(ErrorKind::InvalidArgument, "savgol: window must be odd and >= 5");
    if (polyorder < 1 || polyorder >= window)
        throw Error(ErrorKind::InvalidArgument, "savgol: need 1 <= polyorder < window");
    if (deriv != 0 && deriv != 1)
        throw Error(ErrorKind::InvalidArgument, "savgol: deriv must be 0 or 1");
}

std::vector<double> savgol_coefficients(const SavGolSpec& spec) {
    spec.validate();
    const int w = spec.window;
    const int h = (w - 1) / 2;
    const int m = spec.polyorder + 1;

    // Normal equations of the windowed Vandermonde fit: (V^T V) y = e_deriv,
    // weights = V y. Gaussian elimination with partial pivoting on the small
    // (m x m) system.
    std::vector<double> vtv(static_cast<size_t>(m) * m, 0.0);
    for (int k = -h; k <= h; ++k) {
        double pk[32];
        pk[0] = 1.0;
        for (int j = 1; j < m; ++j) pk[j] = pk[j - 1] * k;
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) vtv[static_cast<size_t>(r) * m + c] += pk[r] * pk[c];
    }
    std::vector<double> rhs(m, 0.0);
    rhs[spec.deriv] = 1.0;

    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::fabs(vtv[static_cast<size_t>(r) * m + col]) >
                std::fabs(vtv[static_cast<size_t>(piv) * m + col]))
                piv = r;
        if (piv != col) {
            for (int c = 0; c < m; ++c)
                std::swap(vtv[static_cast<size_t>(col) * m + c],
                          vtv[static_cast<size_t>(piv) * m + c]);
            std::swap(rhs[col], rhs[piv]);
        }
        const double d = vtv[static_cast<size_t>(col) * m + col];
        if (d == 0.0)
            throw Error(ErrorKind::InvalidArgument, "savgol: singular normal equations");
        for (int r = 0; r < m; ++r) {
            if (r == col) continue;
            const double f = vtv[static_cast<size_t>(r) * m + col] / d;
            if (f == 0.0) continue;
            for (int c = col; c < m; ++c)
                vtv[static_cast<size_t>(r) * m + c] -= f * vtv[static_cast<size_t>(col) * m + c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> y(m);
    for (int i = 0; i < m; ++i) y[i] = rhs[i] / vtv[static_cast<size_t>(i) * m + i];

    double dfac = 1.0;
    for (int j = 2; j <= spec.deriv; ++j) dfac *= j;

    std::vector<double> weights(w);
    for (int k = -h; k <= h; ++k) {
        double pk = 1.0, s = 0.0;
        for (int j = 0; j < m; ++j) {
            s += y[j] * pk;
            pk *= k;
        }
        weights[k + h] = s * dfac;
    }
    return weights;
}

namespace {

// Mirror padding about the end samples: x[-i] = x[i], x[n-1+i] = x[n-1-i].
double padded(const std::vector<double>& v, long i) {
    const long n = static_cast<long>(v.size());
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return v[static_cast<size_t>(i)];
}

std::vector<double> convolve_mirrored(const std::vector<double>& values,
                                      const std::vector<double>& weights) {
    const long n = static_cast<long>(values.size());
    const long h = (static_cast<long>(weights.size()) - 1) / 2;
    std::vector<double> out(values.size());
    for (long t = 0; t < n; ++t) {
        double s = 0.0;
        for (long k = -h; k <= h; ++k) s += weights[static_cast<size_t>(k + h)] * padded(values, t + k);
        out[static_cast<size_t>(t)] = s;
    }
    return out;
}

} // namespace

std::vector<double> smooth_series(const std::vector<double>& values,
                                  const SavGolSpec& spec) {
    SavGolSpec s = spec;
    s.deriv = 0;
    s.validate();
    if (values.size() < static_cast<size_t>(s.window))
        throw Error(ErrorKind::InvalidArgument, "savgol: series shorter than window");
    return convolve_mirrored(values, savgol_coefficients(s));
}

std::vector<double> differentiate_series(const TraceSeries& series,
                                         const SavGolSpec& spec) {
    series.validate();
    SavGolSpec s = spec;
    s.deriv = 1;
    s.validate();
    if (series.size() < static_cast<size_t>(s.window))
        throw Error(ErrorKind::InvalidArgument,
                    "differentiate_series: series shorter than window");
    const double spacing = (series.steps.back() - series.steps.front()) /
                           static_cast<double>(series.size() - 1);
    std::vector<double> d = convolve_mirrored(series.values, savgol_coefficients(s));
    for (auto& v : d) v /= spacing;
    return d;
}

PhaseReport classify_phases(const TraceSeries& series, const SavGolSpec& smooth_spec,
                            const PhaseThresholds& thresholds) {
    series.validate();
    SavGolSpec spec = smooth_spec;
    spec.deriv = 0;
    spec.validate();
    const long n = static_cast<long>(series.size());
    if (n < 3L * spec.window)
        throw Error(ErrorKind::InvalidArgument,
                    "classify_phases: series too short (" + std::to_string(n) +
                    " samples, need 3 x window = " + std::to_string(3 * spec.window) +
                    "; pass a smaller --window)");

    PhaseReport rep;
    const std::vector<double> smooth = smooth_series(series.values, spec);

    long peak = 0;
    for (long i = 1; i < n; ++i)
        if (smooth[static_cast<size_t>(i)] > smooth[static_cast<size_t>(peak)]) peak = i;
    rep.peak_index = peak;
    rep.peak_step = series.steps[static_cast<size_t>(peak)];
    rep.peak_value = smooth[static_cast<size_t>(peak)];

    const long tail = std::max(1L, n / 10);
    double plateau = 0.0;
    for (long i = n - tail; i < n; ++i) plateau += smooth[static_cast<size_t>(i)];
    rep.plateau_value = plateau / static_cast<double>(tail);

    const std::vector<double> deriv = differentiate_series(series, spec);
    double max_abs = 0.0;
    for (double v : deriv) max_abs = std::max(max_abs, std::fabs(v));

    // Degenerate (all-equal) series: nothing to detect.
    double vmin = series.values[0], vmax = series.values[0];
    for (double v : series.values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    if (max_abs == 0.0 || vmax - vmin <= 1e-15 * std::max(1.0, std::fabs(vmax))) {
        rep.pb_detected = false;
        return rep;
    }

    const double up_th = thresholds.up * max_abs;
    const double down_th = thresholds.down * max_abs;

    // Memorization: the last sustained run of dTr > up_th at or before the
    // peak; the interval extends through the crest to the peak itself.
    long run_start = -1, run_len = 0, best_start = -1, best_end = -1;
    for (long i = 0; i <= peak; ++i) {
        if (deriv[static_cast<size_t>(i)] > up_th) {
            if (run_start < 0) run_start = i;
            ++run_len;
            if (run_len >= thresholds.min_len) {
                best_start = run_start;
                best_end = i;
            }
        } else {
            run_start = -1;
            run_len = 0;
        }
    }
    if (best_start >= 0) {
        StepInterval mem;
        mem.begin_index = best_start;
        mem.end_index = peak;
        mem.begin_step = series.steps[static_cast<size_t>(best_start)];
        mem.end_step = rep.peak_step;
        rep.memorization = mem;
        (void)best_end;
    }

    // Reorganization: the first sustained run of dTr < -down_th at or after
    // the peak; the interval starts at the peak.
    run_start = -1;
    run_len = 0;
    long reorg_end = -1;
    for (long i = peak; i < n; ++i) {
        if (deriv[static_cast<size_t>(i)] < -down_th) {
            if (run_start < 0) run_start = i;
            ++run_len;
            if (run_len >= thresholds.min_len) {
                reorg_end = i;
            }
        } else {
            if (reorg_end >= 0) break;
            run_start = -1;
            run_len = 0;
        }
    }
    if (reorg_end >= 0) {
        StepInterval re;
        re.begin_index = peak;
        re.end_index = reorg_end;
        re.begin_step = rep.peak_step;
        re.end_step = series.steps[static_cast<size_t>(reorg_end)];
        rep.reorganization = re;
    }

    rep.pb_detected = rep.memorization.has_value() && rep.reorganization.has_value() &&
                      rep.peak_value >= thresholds.prominence * rep.plateau_value;
    return rep;
}

std::string report_to_text(const PhaseReport& r, const std::string& label) {
    std::ostringstream os;
    os << "[" << label << "]\n";
    os << "  pb_detected: " << (r.pb_detected ? "yes" : "no") << "\n";
    os << "  peak: step " << r.peak_step << " (index " << r.peak_index
       << "), value " << r.peak_value << "\n";
    os << "  plateau (final 10%): " << r.plateau_value << "\n";
    if (r.memorization)
        os << "  memorization: steps [" << r.memorization->begin_step << ", "
           << r.memorization->end_step << "]\n";
    else
        os << "  memorization: absent\n";
    if (r.reorganization)
        os << "  reorganization: steps [" << r.reorganization->begin_step << ", "
           << r.reorganization->end_step << "]\n";
    else
        os << "  reorganization: absent\n";
    return os.str();
}

} // namespace fgsf::pbdetect
