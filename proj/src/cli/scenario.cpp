#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "pimaw/cli.hpp"

namespace pimaw::cli {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
    throw ScenarioError("scenario: " + where + ": " + msg);
}

// Object view that remembers which keys were read so leftovers can be rejected.
class Fields {
   public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) fail(where_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& get(const std::string& key) {
        if (!j_.contains(key)) fail(where_, "missing required key '" + key + "'");
        seen_.insert(key);
        return j_.at(key);
    }

    const json* opt(const std::string& key) {
        if (!j_.contains(key)) return nullptr;
        seen_.insert(key);
        return &j_.at(key);
    }

    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(where_, "unknown key '" + it.key() + "'");
    }

   private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

double number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(where, "must be finite");
    return v;
}

double positive(const json& j, const std::string& where) {
    const double v = number(j, where);
    if (!(v > 0.0)) fail(where, "must be positive");
    return v;
}

int integer(const json& j, const std::string& where, int lo) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    const auto v = j.get<long long>();
    if (v < lo || v > 1000000) fail(where, "out of range");
    return static_cast<int>(v);
}

std::uint64_t seed_value(const json& j, const std::string& where) {
    if (!j.is_number_unsigned()) fail(where, "seed must be a non-negative integer");
    return j.get<std::uint64_t>();
}

std::vector<double> numbers(const json& j, const std::string& where, int expect = -1) {
    if (!j.is_array()) fail(where, "expected an array of numbers");
    std::vector<double> out;
    for (size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    if (expect >= 0 && static_cast<int>(out.size()) != expect)
        fail(where, "expected " + std::to_string(expect) + " entries, got " + std::to_string(out.size()));
    return out;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::pair<double, double> range(const json& j, const std::string& where) {
    const auto r = numbers(j, where, 2);
    if (!(r[0] <= r[1])) fail(where, "range must satisfy lo <= hi");
    return {r[0], r[1]};
}

Mat matrix(const json& j, const std::string& where, int rows, int cols) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        fail(where, "expected " + std::to_string(rows) + " rows");
    Mat M(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const auto r = numbers(j[static_cast<size_t>(i)], where + "[" + std::to_string(i) + "]", cols);
        for (int c = 0; c < cols; ++c) M(i, c) = r[static_cast<size_t>(c)];
    }
    return M;
}

json matrix_json(const Mat& M) {
    json rows = json::array();
    for (int i = 0; i < M.rows(); ++i) {
        json r = json::array();
        for (int c = 0; c < M.cols(); ++c) r.push_back(M(i, c));
        rows.push_back(r);
    }
    return rows;
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::vector<double> poly(const json& j, const std::string& where) {
    const auto c = numbers(j, where);
    if (c.size() < 2) fail(where, "need degree >= 1");
    if (c.front() != 1.0) fail(where, "leading coefficient must be 1");
    return c;
}

Vec draw_uniform(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> U(lo, hi);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = lo == hi ? lo : U(rng);
    return v;
}

struct SignalOut {
    SignalSource source;
    json resolved;
};

SignalOut parse_signal(const json& j, int n, const Overrides& ov) {
    Fields f(j, "signal");
    const auto& type_j = f.get("type");
    if (!type_j.is_string()) fail("signal.type", "expected a string");
    const std::string type = type_j.get<std::string>();
    json res;
    res["type"] = type;

    std::optional<std::uint64_t> seed;
    if (f.has("seed")) seed = seed_value(*f.opt("seed"), "signal.seed");
    auto need_seed = [&](const std::string& what) -> std::mt19937_64 {
        if (!seed) fail("signal", what + " is randomized and requires 'seed'");
        if (ov.seed) seed = *ov.seed + 1;
        res["seed"] = *seed;
        return std::mt19937_64(*seed);
    };

    if (type == "exosystem") {
        const auto coeffs = poly(f.get("poly_coeffs"), "signal.poly_coeffs");
        ExosystemModel model = [&] {
            try {
                return companion_realization(coeffs);
            } catch (const std::exception& e) {
                fail("signal.poly_coeffs", e.what());
            }
        }();
        res["poly_coeffs"] = coeffs;
        Mat xi0;
        if (const json* x = f.opt("xi0")) {
            if (f.has("xi0_range")) fail("signal", "give either 'xi0' or 'xi0_range', not both");
            xi0 = matrix(*x, "signal.xi0", model.m, n);
            res["xi0"] = matrix_json(xi0);
        } else {
            const auto [lo, hi] = range(f.get("xi0_range"), "signal.xi0_range");
            auto rng = need_seed("xi0_range");
            xi0 = Mat(model.m, n);
            for (int c = 0; c < n; ++c) xi0.col(c) = draw_uniform(rng, model.m, lo, hi);
            res["xi0_range"] = {lo, hi};
        }
        f.done();
        return {ExosystemSignal(model, xi0), res};
    }

    if (type == "triangular_wave") {
        const double omega = positive(f.get("omega"), "signal.omega");
        res["omega"] = omega;
        TriangularWave tw;
        tw.period = Vec::Constant(n, 2.0 * std::numbers::pi / omega);
        if (const json* a = f.opt("amplitude")) {
            if (f.has("amplitude_range")) fail("signal", "give either 'amplitude' or 'amplitude_range', not both");
            tw.amplitude = to_vec(numbers(*a, "signal.amplitude", n));
            tw.phase = f.has("phase") ? to_vec(numbers(*f.opt("phase"), "signal.phase", n)) : Vec::Zero(n);
            res["amplitude"] = vec_json(tw.amplitude);
            res["phase"] = vec_json(tw.phase);
        } else {
            const auto [lo, hi] = range(f.get("amplitude_range"), "signal.amplitude_range");
            if (f.has("phase")) fail("signal", "'phase' is drawn when 'amplitude_range' is used");
            auto rng = need_seed("amplitude_range");
            tw.amplitude = draw_uniform(rng, n, lo, hi);
            tw.phase = draw_uniform(rng, n, 0.0, 2.0 * std::numbers::pi);
            res["amplitude_range"] = {lo, hi};
        }
        f.done();
        return {tw, res};
    }

    if (type == "sinusoid_plus_constant") {
        SinusoidPlusConstant sp;
        sp.omega = positive(f.get("omega"), "signal.omega");
        res["omega"] = sp.omega;
        if (const json* a = f.opt("amp")) {
            if (f.has("amp_range")) fail("signal", "give either 'amp' or 'amp_range', not both");
            sp.amp = to_vec(numbers(*a, "signal.amp", n));
            sp.phase = f.has("phase") ? to_vec(numbers(*f.opt("phase"), "signal.phase", n)) : Vec::Zero(n);
            sp.offset = to_vec(numbers(f.get("offset"), "signal.offset", n));
            res["amp"] = vec_json(sp.amp);
            res["phase"] = vec_json(sp.phase);
            res["offset"] = vec_json(sp.offset);
        } else {
            const auto [alo, ahi] = range(f.get("amp_range"), "signal.amp_range");
            const auto [olo, ohi] = range(f.get("offset_range"), "signal.offset_range");
            if (f.has("phase")) fail("signal", "'phase' is drawn when 'amp_range' is used");
            auto rng = need_seed("amp_range");
            sp.amp = draw_uniform(rng, n, alo, ahi);
            sp.phase = draw_uniform(rng, n, 0.0, 2.0 * std::numbers::pi);
            sp.offset = draw_uniform(rng, n, olo, ohi);
            res["amp_range"] = {alo, ahi};
            res["offset_range"] = {olo, ohi};
        }
        f.done();
        return {sp, res};
    }
    fail("signal.type", "unknown signal type '" + type + "'");
}

}  // namespace

Mat random_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Mat G(n, n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) G(r, c) = N(rng);
    Eigen::HouseholderQR<Mat> qr(G);
    Mat Q = qr.householderQ();
    const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (R(j, j) < 0.0) Q.col(j) *= -1.0;
    return Q;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<size_t>(i)] = digits[v & 0xF];
    return s;
}

QuadraticProblem ScenarioSpec::problem() const { return QuadraticProblem(A, lambda_min, lambda_max); }

Scenario ScenarioSpec::simulator_scenario(const std::optional<LoopDesign>& design) const {
    Scenario sc{problem(), *signal, design, alpha, t_end, dt, decimation, eta0, q0};
    return sc;
}

ScenarioSpec parse_scenario(const json& doc, const Overrides& ov) {
    Fields top(doc, "scenario");
    ScenarioSpec s;
    json res;

    if (const json* d = top.opt("description")) {
        if (!d->is_string()) fail("description", "expected a string");
        res["description"] = *d;
    }
    s.n = integer(top.get("n"), "n", 1);
    res["n"] = s.n;

    // Hessian
    {
        Fields h(top.get("hessian"), "hessian");
        const auto& mode_j = h.get("mode");
        if (!mode_j.is_string()) fail("hessian.mode", "expected a string");
        const std::string mode = mode_j.get<std::string>();
        json hr;
        hr["mode"] = mode;
        if (mode == "random_orthogonal") {
            const auto [lo, hi] = range(h.get("eig_range"), "hessian.eig_range");
            if (!(lo > 0.0)) fail("hessian.eig_range", "lambda_min must be positive");
            std::uint64_t seed = seed_value(h.get("seed"), "hessian.seed");
            if (ov.seed) seed = *ov.seed;
            std::mt19937_64 rng(seed);
            const Mat V = random_orthogonal(s.n, rng);
            const Vec lam = draw_uniform(rng, s.n, lo, hi);
            s.A = V * lam.asDiagonal() * V.transpose();
            s.A = 0.5 * (s.A + s.A.transpose());
            s.lambda_min = lo;
            s.lambda_max = hi;
            hr["eig_range"] = {lo, hi};
            hr["seed"] = seed;
        } else if (mode == "explicit") {
            s.A = matrix(h.get("matrix"), "hessian.matrix", s.n, s.n);
            if (relative_asymmetry(s.A) > CoreTolerances{}.symmetry) fail("hessian.matrix", "matrix is not symmetric");
            if (const json* r = h.opt("eig_range")) {
                std::tie(s.lambda_min, s.lambda_max) = range(*r, "hessian.eig_range");
            } else {
                const auto ev = symmetric_eigendecomposition(s.A).values;
                s.lambda_min = ev.minCoeff();
                s.lambda_max = ev.maxCoeff();
            }
            if (!(s.lambda_min > 0.0)) fail("hessian", "matrix must be positive definite");
            hr["matrix"] = matrix_json(s.A);
            hr["eig_range"] = {s.lambda_min, s.lambda_max};
        } else {
            fail("hessian.mode", "expected 'explicit' or 'random_orthogonal'");
        }
        h.done();
        try {
            (void)s.problem();
        } catch (const std::exception& e) {
            fail("hessian", e.what());
        }
        res["hessian"] = hr;
    }

    auto sig = parse_signal(top.get("signal"), s.n, ov);
    s.signal = std::move(sig.source);
    res["signal"] = sig.resolved;

    {
        Fields im(top.get("internal_model"), "internal_model");
        s.internal_model = poly(im.get("poly_coeffs"), "internal_model.poly_coeffs");
        im.done();
        try {
            (void)companion_realization(s.internal_model);
        } catch (const std::exception& e) {
            fail("internal_model.poly_coeffs", e.what());
        }
        res["internal_model"] = {{"poly_coeffs", s.internal_model}};
    }
    const int m = static_cast<int>(s.internal_model.size()) - 1;

    s.gamma = positive(top.get("gamma"), "gamma");
    if (ov.gamma) {
        if (!(*ov.gamma > 0.0) || !std::isfinite(*ov.gamma)) fail("--gamma", "must be positive");
        s.gamma = *ov.gamma;
    }
    s.alpha = top.has("alpha") ? positive(*top.opt("alpha"), "alpha") : 1.0 / s.lambda_max;
    s.t_end = top.has("t_end") ? positive(*top.opt("t_end"), "t_end") : 45.0;
    s.dt = top.has("dt") ? positive(*top.opt("dt"), "dt") : 1e-3;
    if (ov.dt) {
        if (!(*ov.dt > 0.0) || !std::isfinite(*ov.dt)) fail("--dt", "must be positive");
        s.dt = *ov.dt;
    }
    s.eps_decay = top.has("eps_decay") ? positive(*top.opt("eps_decay"), "eps_decay") : 0.5;
    res["gamma"] = s.gamma;
    res["alpha"] = s.alpha;
    res["t_end"] = s.t_end;
    res["dt"] = s.dt;
    res["eps_decay"] = s.eps_decay;

    s.eta0 = Vec::Zero(s.n * m);
    s.q0 = Vec::Zero(s.n);
    if (const json* ij = top.opt("init")) {
        Fields in(*ij, "init");
        if (const json* e = in.opt("eta0")) s.eta0 = to_vec(numbers(*e, "init.eta0", s.n * m));
        if (const json* q = in.opt("q0")) s.q0 = to_vec(numbers(*q, "init.q0", s.n));
        in.done();
    }
    res["init"] = {{"eta0", vec_json(s.eta0)}, {"q0", vec_json(s.q0)}};

    for (int i = 0; i < s.n; ++i) s.columns.push_back(i);
    if (const json* oj = top.opt("output")) {
        Fields out(*oj, "output");
        if (const json* d = out.opt("decimation")) s.decimation = integer(*d, "output.decimation", 1);
        if (const json* c = out.opt("columns")) {
            if (c->is_string() && c->get<std::string>() == "all") {
            } else if (c->is_array()) {
                s.columns.clear();
                for (size_t i = 0; i < c->size(); ++i) {
                    const int k = integer((*c)[i], "output.columns", 0);
                    if (k >= s.n) fail("output.columns", "index out of range");
                    s.columns.push_back(k);
                }
            } else {
                fail("output.columns", "expected \"all\" or an array of state indices");
            }
        }
        out.done();
    }
    res["output"] = {{"decimation", s.decimation}, {"columns", s.columns}};
    top.done();

    s.resolved = res;
    s.hash = fnv1a(res.dump());
    return s;
}

ScenarioSpec load_scenario(const std::string& path, const Overrides& ov) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError("scenario '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_scenario(doc, ov);
}

}  // namespace pimaw::cli
