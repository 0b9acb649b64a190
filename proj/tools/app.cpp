#include "app.hpp"

#include "cwnn/datasets.hpp"
#include "cwnn/error.hpp"
#include "cwnn/frequency_estimator.hpp"
#include "cwnn/growth_engine.hpp"
#include "cwnn/spectral_diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace cwnn::app {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_tree() {
    return json::parse(R"({
  "command": "",
  "preset": "example1-d1",
  "seed": 1,
  "data": {
    "source": "example1",
    "variant": "D1",
    "n": 1000,
    "train_fraction": 0.8,
    "n_per_region": 400,
    "length": 4000,
    "switch_at": 1000,
    "noise_sd": 0.01,
    "csv": {"path": "", "target": "", "features": [], "scale": true, "scale_target": true, "lag_target": false}
  },
  "wavelet": {"family": "sinc"},
  "grid": {"domain_low": [0, 0], "domain_high": [1, 1], "margin": 1.0, "clamp_low": [0, 0]},
  "estimator": {
    "start_m": 1, "kappa": 0.36, "kappa_mode": "total", "learning_rate": 0.0005,
    "m_cap": 10, "updates": 500, "max_probe_bases": 20000, "tie": "low"
  },
  "growth": {
    "epsilon": 0.006, "zeta": 4e-5, "mu": "1/3", "learning_rate": 0.0005, "m_init": "auto",
    "max_resolution": 6, "max_iters": 50000, "tie": "low", "include_scaling": true,
    "batch_size": 0, "wnn_start": 1
  },
  "baseline": "none",
  "online": {"window": 10, "memory_windows": 50, "steps_per_window": 100, "patience": 50},
  "diag": {
    "box": {"T": [1, 1], "t_eps": [150, 150], "m0": 3, "m1": 0},
    "family": "sinc",
    "expansion": [{"m": 1, "n": [0, 0], "coeff": 1.0}, {"m": 2, "n": [1, -2], "coeff": 0.5}],
    "scan_extra": 2, "n_margin": 5, "tolerance": 0.001,
    "unimodality": true, "profile_m_last": 6, "threads": 1
  },
  "sweep": {"command": "fit", "param": "mu", "values": ["1/2", "1/3", "1/4", "1/5"], "threads": 1}
})");
}

const json& node(const json& cfg, const std::string& path) {
    const json* cur = &cfg;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!cur->is_object() || !cur->contains(key))
            throw ConfigError("missing field '" + path + "'");
        cur = &(*cur)[key];
        if (dot == std::string::npos)
            return *cur;
        start = dot + 1;
    }
}

template <class T>
T get(const json& cfg, const std::string& path) {
    const json& n = node(cfg, path);
    try {
        return n.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("field '" + path + "' has the wrong type (got " + n.dump() + ")");
    }
}

bool is_null(const json& cfg, const std::string& path) {
    return node(cfg, path).is_null();
}

// A number, or a fraction written as "a/b".
double parse_number(const json& n, const std::string& path) {
    if (n.is_number())
        return n.get<double>();
    if (n.is_string()) {
        const std::string s = n.get<std::string>();
        const auto slash = s.find('/');
        auto num = [&](std::string_view t, double& v) {
            const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
            return r.ec == std::errc() && r.ptr == t.data() + t.size() && !t.empty();
        };
        double a = 0.0, b = 1.0;
        const std::string_view sv(s);
        if (slash == std::string::npos ? num(sv, a) : num(sv.substr(0, slash), a) && num(sv.substr(slash + 1), b))
            if (b != 0.0)
                return a / b;
    }
    throw ConfigError("field '" + path + "' must be a number or a fraction like \"1/3\" (got " + n.dump() + ")");
}

double number(const json& cfg, const std::string& path) {
    return parse_number(node(cfg, path), path);
}

std::vector<double> numbers(const json& cfg, const std::string& path) {
    const json& n = node(cfg, path);
    if (!n.is_array())
        throw ConfigError("field '" + path + "' must be an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i)
        out.push_back(parse_number(n[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

TieBreak tie_from(const json& cfg, const std::string& path) {
    const auto s = get<std::string>(cfg, path);
    if (s == "low")
        return TieBreak::Low;
    if (s == "random")
        return TieBreak::Random;
    throw ConfigError("field '" + path + "' must be \"low\" or \"random\"");
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + p.string() + "'");
    out << text;
}

Dataset concat(const Dataset& a, const Dataset& b) {
    Dataset out;
    out.x.resize(a.x.rows() + b.x.rows(), a.x.cols());
    out.x << a.x, b.x;
    out.y.resize(a.y.size() + b.y.size());
    out.y << a.y, b.y;
    out.meta = a.meta;
    out.meta.variant = a.meta.variant + "+" + b.meta.variant;
    return out;
}

// Inputs (y_{t-1}, x_t), target y_t.
Dataset lag_target(const Dataset& ds) {
    if (ds.size() < 2)
        throw DataError("lag_target needs at least two rows");
    Dataset out;
    const auto n = static_cast<Eigen::Index>(ds.size()) - 1;
    out.x.resize(n, ds.x.cols() + 1);
    out.y = ds.y.tail(n);
    out.x.col(0) = ds.y.head(n);
    out.x.rightCols(ds.x.cols()) = ds.x.bottomRows(n);
    out.meta = ds.meta;
    out.meta.feature_names.insert(out.meta.feature_names.begin(), "lag_" + ds.meta.target_name);
    return out;
}

struct Data {
    Dataset train;
    std::optional<Dataset> test;
    std::optional<Dataset> combined;  // second stage of example2
    // input range of the whole table before the split
    std::optional<std::pair<std::vector<double>, std::vector<double>>> range;
};

Data load_data(const json& cfg) {
    const auto source = get<std::string>(cfg, "data.source");
    const auto seed = get<std::uint64_t>(cfg, "seed");
    Data d;
    if (source == "example1") {
        const auto variant = example1_variant_from_string(get<std::string>(cfg, "data.variant"));
        auto all = gen_example1(variant, get<std::size_t>(cfg, "data.n"), seed);
        auto [tr, te] = split(all, number(cfg, "data.train_fraction"), seed);
        d.train = std::move(tr);
        d.test = std::move(te);
    } else if (source == "example2") {
        auto [a, b] = gen_example2_regions(get<std::size_t>(cfg, "data.n_per_region"), seed);
        d.combined = concat(a, b);
        d.train = std::move(a);
    } else if (source == "autoregression") {
        std::optional<std::size_t> sw;
        if (!is_null(cfg, "data.switch_at"))
            sw = get<std::size_t>(cfg, "data.switch_at");
        d.train = gen_autoregression(get<std::size_t>(cfg, "data.length"), seed, sw, number(cfg, "data.noise_sd"));
    } else if (source == "csv") {
        const auto path = get<std::string>(cfg, "data.csv.path");
        const auto target = get<std::string>(cfg, "data.csv.target");
        if (path.empty())
            throw ConfigError("field 'data.csv.path' is required for csv data");
        if (target.empty())
            throw ConfigError("field 'data.csv.target' is required for csv data");
        Dataset all = load_csv(path, target, get<std::vector<std::string>>(cfg, "data.csv.features"));
        if (get<bool>(cfg, "data.csv.lag_target"))
            all = lag_target(all);
        if (get<bool>(cfg, "data.csv.scale"))
            all = minmax_scale(all, get<bool>(cfg, "data.csv.scale_target"));
        d.range = input_range(all);
        auto [tr, te] = split(all, number(cfg, "data.train_fraction"), seed);
        d.train = std::move(tr);
        d.test = std::move(te);
    } else {
        throw ConfigError("field 'data.source' must be example1, example2, autoregression or csv");
    }
    return d;
}

MotherWavelet wavelet(const json& cfg, const std::string& path, int dim) {
    const auto name = get<std::string>(cfg, path);
    Family f;
    try {
        f = family_from_string(name);
    } catch (const ContractError&) {
        throw ConfigError("field '" + path + "' must be \"sinc\" or \"mexican_hat\"");
    }
    return MotherWavelet::make(f, dim);
}

GridBounds bounds_for(const json& cfg, const Data& d) {
    const Dataset& data = d.train;
    std::vector<double> lo, hi;
    if (is_null(cfg, "grid.domain_low") || is_null(cfg, "grid.domain_high")) {
        std::tie(lo, hi) = d.range ? *d.range : input_range(d.combined ? *d.combined : data);
    } else {
        lo = numbers(cfg, "grid.domain_low");
        hi = numbers(cfg, "grid.domain_high");
    }
    if (lo.size() != data.dim() || hi.size() != data.dim())
        throw ConfigError("fields 'grid.domain_low' and 'grid.domain_high' must have one entry per input (" +
                          std::to_string(data.dim()) + ")");
    std::optional<std::vector<double>> clamp;
    if (!is_null(cfg, "grid.clamp_low")) {
        clamp = numbers(cfg, "grid.clamp_low");
        if (clamp->size() != data.dim())
            throw ConfigError("field 'grid.clamp_low' must have one entry per input");
    }
    return make_bounds(lo, hi, number(cfg, "grid.margin"), clamp);
}

EstimatorConfig estimator_config(const json& cfg) {
    EstimatorConfig e;
    e.kappa = number(cfg, "estimator.kappa");
    const auto mode = get<std::string>(cfg, "estimator.kappa_mode");
    if (mode == "total")
        e.kappa_mode = KappaMode::Total;
    else if (mode == "per_axis")
        e.kappa_mode = KappaMode::PerAxis;
    else
        throw ConfigError("field 'estimator.kappa_mode' must be \"total\" or \"per_axis\"");
    e.learning_rate = number(cfg, "estimator.learning_rate");
    e.epsilon = number(cfg, "growth.epsilon");
    e.m_cap = get<int>(cfg, "estimator.m_cap");
    e.updates = get<int>(cfg, "estimator.updates");
    e.max_probe_bases = get<std::size_t>(cfg, "estimator.max_probe_bases");
    e.tie = tie_from(cfg, "estimator.tie");
    e.seed = get<std::uint64_t>(cfg, "seed");
    return e;
}

GrowthConfig growth_config(const json& cfg, const GridBounds& bounds, int m_init) {
    GrowthConfig g;
    g.epsilon = number(cfg, "growth.epsilon");
    g.zeta = number(cfg, "growth.zeta");
    g.mu = number(cfg, "growth.mu");
    g.learning_rate = number(cfg, "growth.learning_rate");
    g.m_init = m_init;
    g.max_resolution = get<int>(cfg, "growth.max_resolution");
    g.max_iters = get<long>(cfg, "growth.max_iters");
    g.seed = get<std::uint64_t>(cfg, "seed");
    g.bounds = bounds;
    g.tie = tie_from(cfg, "growth.tie");
    g.include_scaling = get<bool>(cfg, "growth.include_scaling");
    g.batch_size = get<std::size_t>(cfg, "growth.batch_size");
    g.wnn_start = get<int>(cfg, "growth.wnn_start");
    return g;
}

struct Estimate {
    EstimateResult result;
    int m_init = 0;
};

Estimate estimate(const json& cfg, const Dataset& data, const MotherWavelet& w, const GridBounds& bounds) {
    const auto grid = build_center_grid(get<int>(cfg, "estimator.start_m"), bounds);
    Estimate e{estimate_initial_resolution(data, w, grid, estimator_config(cfg)), 0};
    e.m_init = e.result.m_init;
    return e;
}

// growth.m_init: an integer, or "auto" for the frequency estimator.
std::optional<int> fixed_m_init(const json& cfg) {
    const json& n = node(cfg, "growth.m_init");
    if (n.is_number_integer())
        return n.get<int>();
    if (n.is_string() && n.get<std::string>() == "auto")
        return std::nullopt;
    throw ConfigError("field 'growth.m_init' must be an integer or \"auto\"");
}

void warn_estimate(const EstimateResult& r, std::ostream& err) {
    if (r.degenerate)
        err << "warning: every probed energy is zero; m_init is the start resolution\n";
    if (r.capped)
        err << "warning: energies still rising at the resolution cap\n";
}

json estimate_summary(const EstimateResult& r) {
    json records = json::array();
    for (const auto& t : r.trace.records)
        records.push_back({{"m", t.m}, {"E_hat", t.e_hat}, {"E_bar", t.e_bar}, {"n_bases", t.n_bases}});
    return {{"m_init", r.m_init},
            {"alternative_m", r.alternative_m},
            {"alpha", r.trace.alpha},
            {"capped", r.capped},
            {"degenerate", r.degenerate},
            {"trace", records}};
}

Outcome cmd_estimate(const json& cfg, const fs::path& dir, std::ostream& out, std::ostream& err) {
    const Data d = load_data(cfg);
    const auto w = wavelet(cfg, "wavelet.family", static_cast<int>(d.train.dim()));
    const auto e = estimate(cfg, d.train, w, bounds_for(cfg, d));
    e.result.trace.write_csv(dir / "energy_trace.csv");
    write_meta(d.train.meta, dir / "data.meta.json");
    warn_estimate(e.result, err);
    out << "m_init=" << e.m_init << '\n';
    return {Ok, dir, estimate_summary(e.result)};
}

json growth_summary(const GrowthResult& r) {
    return {{"status", to_string(r.status)},
            {"stop_reason", r.stop_reason},
            {"train_loss", r.loss},
            {"n_params", r.model.size()},
            {"iterations", r.iterations},
            {"final_resolution", r.final_resolution},
            {"growth_events", r.log.events.size()}};
}

Outcome cmd_fit(const json& cfg, const fs::path& dir, std::ostream& out, std::ostream& err) {
    const Data d = load_data(cfg);
    const auto w = wavelet(cfg, "wavelet.family", static_cast<int>(d.train.dim()));
    const auto bounds = bounds_for(cfg, d);
    const auto baseline = get<std::string>(cfg, "baseline");
    if (baseline != "none" && baseline != "wnn")
        throw ConfigError("field 'baseline' must be \"none\" or \"wnn\"");

    json summary;
    int m_init;
    if (const auto fixed = fixed_m_init(cfg)) {
        m_init = *fixed;
    } else {
        const auto e = estimate(cfg, d.train, w, bounds);
        e.result.trace.write_csv(dir / "energy_trace.csv");
        warn_estimate(e.result, err);
        m_init = e.m_init;
        summary["estimate"] = estimate_summary(e.result);
    }
    const auto g = growth_config(cfg, bounds, m_init);

    if (baseline == "wnn" && d.combined)
        throw ConfigError("field 'baseline': the wnn baseline does not support staged example2 data");
    GrowthResult r = baseline == "wnn" ? run_baseline_wnn(d.train, w, g) : run_growth(d.train, w, g);
    if (d.combined) {
        json first = growth_summary(r);
        first["loss_on_combined"] = loss(r.model, *d.combined);
        summary["first_stage"] = first;
        if (r.status == TrainStatus::Achieved)
            r = continue_growth(*d.combined, r, g);
    }
    r.log.write_csv(dir / "train_log.csv");
    r.log.write_events_csv(dir / "events.csv");
    write_text(dir / "model.json", model_to_json(r.model) + "\n");
    write_meta(d.train.meta, dir / "data.meta.json");

    summary.update(growth_summary(r));
    summary["method"] = baseline == "wnn" ? "wnn" : "cwnn";
    summary["m_init"] = m_init;
    summary["epsilon"] = g.epsilon;
    summary["test_loss"] = d.test ? json(loss(r.model, *d.test)) : json(nullptr);
    out << "status=" << to_string(r.status) << " n_params=" << r.model.size() << " train_loss=" << r.loss
        << " iterations=" << r.iterations << '\n';
    return {r.status == TrainStatus::Achieved ? Ok : BudgetExceeded, dir, summary};
}

Outcome cmd_online(const json& cfg, const fs::path& dir, std::ostream& out, std::ostream&) {
    const Data d = load_data(cfg);
    const Dataset& stream = d.combined ? *d.combined : d.train;
    const auto w = wavelet(cfg, "wavelet.family", static_cast<int>(stream.dim()));
    const auto bounds = bounds_for(cfg, d);
    const auto fixed = fixed_m_init(cfg);
    if (!fixed)
        throw ConfigError("field 'growth.m_init' must be an integer for online runs");
    const auto g = growth_config(cfg, bounds, *fixed);
    OnlineConfig o;
    o.window = get<std::size_t>(cfg, "online.window");
    o.memory_windows = get<std::size_t>(cfg, "online.memory_windows");
    o.steps_per_window = get<long>(cfg, "online.steps_per_window");
    o.patience = get<long>(cfg, "online.patience");
    const auto r = run_online(stream, w, g, o);

    {
        std::ofstream csv(dir / "online_trace.csv");
        csv.precision(17);
        csv << "window,steps,loss,n_params\n";
        for (const auto& t : r.trace)
            csv << t.window << ',' << t.steps << ',' << t.loss << ',' << t.n_params << '\n';
    }
    r.log.write_csv(dir / "train_log.csv");
    r.log.write_events_csv(dir / "events.csv");
    write_text(dir / "model.json", model_to_json(r.model) + "\n");
    write_meta(stream.meta, dir / "data.meta.json");

    json s;
    const double final_loss = r.trace.empty() ? 0.0 : r.trace.back().loss;
    std::size_t growth = 0;
    for (const auto& e : r.log.events)
        growth += e.event != "seed";
    s["final_loss"] = final_loss;
    s["n_params"] = r.model.size();
    s["total_steps"] = r.total_steps;
    s["windows"] = r.trace.size();
    s["growth_events"] = growth;
    s["epsilon"] = g.epsilon;
    s["reconverged"] = final_loss <= g.epsilon;
    if (stream.meta.switch_at) {
        const long sw = static_cast<long>(*stream.meta.switch_at / o.window);
        double before = std::numeric_limits<double>::infinity(), peak = 0.0;
        std::size_t after_events = 0;
        for (const auto& t : r.trace) {
            if (t.window < sw)
                before = std::min(before, t.loss);
            else
                peak = std::max(peak, t.loss);
        }
        for (const auto& e : r.log.events)
            after_events += e.event != "seed" && e.iter >= sw;
        s["switch_window"] = sw;
        s["min_loss_before_switch"] = std::isfinite(before) ? json(before) : json(nullptr);
        s["peak_loss_after_switch"] = peak;
        s["growth_events_after_switch"] = after_events;
    }
    out << "final_loss=" << final_loss << " n_params=" << r.model.size() << " growth_events=" << growth << '\n';
    return {final_loss <= g.epsilon ? Ok : BudgetExceeded, dir, s};
}

TimeFrequencyBox box_from(const json& cfg) {
    if (is_null(cfg, "diag.box"))
        throw ConfigError("missing field 'diag.box' (T, t_eps, m0, m1)");
    TimeFrequencyBox b;
    b.T = numbers(cfg, "diag.box.T");
    b.t_eps = get<std::vector<int>>(cfg, "diag.box.t_eps");
    b.m0 = get<int>(cfg, "diag.box.m0");
    b.m1 = get<int>(cfg, "diag.box.m1");
    try {
        b.validate();
    } catch (const ContractError& e) {
        throw ConfigError(std::string("field 'diag.box': ") + e.what());
    }
    return b;
}

Outcome cmd_diag(const json& cfg, const fs::path& dir, std::ostream& out, std::ostream&) {
    const auto box = box_from(cfg);
    const json& terms = node(cfg, "diag.expansion");
    if (!terms.is_array() || terms.empty())
        throw ConfigError("field 'diag.expansion' must be a non-empty array of {m, n, coeff}");
    WaveletModel target(wavelet(cfg, "diag.family", static_cast<int>(box.dim())));
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string p = "diag.expansion[" + std::to_string(i) + "]";
        try {
            const auto n = terms[i].at("n").get<std::vector<int>>();
            if (n.size() != box.dim())
                throw ConfigError("field '" + p + ".n' must match the box dimension");
            target.add(BasisIndex::wavelet(terms[i].at("m").get<int>(), n), terms[i].at("coeff").get<double>());
        } catch (const json::exception&) {
            throw ConfigError("field '" + p + "' must hold integer m, integer array n and number coeff");
        }
    }
    const auto scan = scan_around(box, get<int>(cfg, "diag.scan_extra"), get<int>(cfg, "diag.n_margin"));
    const auto rep = decay_report(target, box, scan, get<unsigned>(cfg, "diag.threads"));
    rep.write_csv(dir / "decay.csv");
    const double tol = number(cfg, "diag.tolerance");

    json s{{"max_inside", rep.max_inside},
           {"max_outside", rep.max_outside},
           {"ratio", rep.ratio},
           {"tolerance", tol},
           {"decay_ok", rep.ratio < tol},
           {"n_scanned", rep.entries.size()},
           {"scan", {{"m_lo", scan.m_lo}, {"m_hi", scan.m_hi}, {"n_margin", scan.n_margin}}}};
    out << "ratio=" << rep.ratio << (rep.ratio < tol ? " (below " : " (not below ") << tol << ")\n";

    if (get<bool>(cfg, "diag.unimodality")) {
        const Data d = load_data(cfg);
        const auto w = wavelet(cfg, "wavelet.family", static_cast<int>(d.train.dim()));
        const auto grid = build_center_grid(get<int>(cfg, "estimator.start_m"), bounds_for(cfg, d));
        const auto trace = energy_profile(d.train, w, grid, estimator_config(cfg), get<int>(cfg, "diag.profile_m_last"));
        trace.write_csv(dir / "unimodality.csv");
        std::vector<double> e;
        for (const auto& t : trace.records)
            e.push_back(t.e_hat);
        const int peaks = count_peaks(e);
        s["peaks"] = peaks;
        s["unimodal"] = peaks == 1;
        out << "peaks=" << peaks << (peaks == 1 ? " (single peak)" : "") << '\n';
    }
    return {Ok, dir, s};
}

Outcome cmd_sweep(const json& cfg, const fs::path& dir, std::ostream& out, std::ostream& err) {
    const auto command = get<std::string>(cfg, "sweep.command");
    if (command == "sweep")
        throw ConfigError("field 'sweep.command' cannot be sweep");
    const auto param = get<std::string>(cfg, "sweep.param");
    std::string path;
    if (param == "mu")
        path = "growth.mu";
    else if (param == "epsilon")
        path = "growth.epsilon";
    else if (param == "seed")
        path = "seed";
    else
        throw ConfigError("field 'sweep.param' must be mu, epsilon or seed");
    const json values = node(cfg, "sweep.values");
    if (!values.is_array() || values.empty())
        throw ConfigError("field 'sweep.values' must be a non-empty array");
    for (std::size_t i = 0; i < values.size(); ++i)
        parse_number(values[i], "sweep.values[" + std::to_string(i) + "]");

    const std::size_t n = values.size();
    std::vector<Outcome> results(n);
    std::vector<std::string> logs(n), errs(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < n;) {
            json sub = cfg;
            std::string pointer = "/" + path;
            std::replace(pointer.begin(), pointer.end(), '.', '/');
            sub[json::json_pointer(pointer)] = values[i];
            std::ostringstream o, e;
            results[i] = run(command, sub, dir / ("run_" + std::to_string(i)), o, e);
            logs[i] = o.str();
            errs[i] = e.str();
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(get<unsigned>(cfg, "sweep.threads"),
                                                             static_cast<unsigned>(n)));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    json runs = json::array();
    std::ofstream csv(dir / "sweep.csv");
    csv.precision(17);
    csv << param << ",exit_code,status,n_params,train_loss,iterations\n";
    int code = Ok;
    std::optional<std::size_t> prev;
    std::size_t rises = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = results[i].summary;
        out << param << '=' << values[i].dump() << ": " << logs[i];
        err << errs[i];
        runs.push_back({{"value", values[i]}, {"exit_code", results[i].exit_code}, {"summary", s}});
        const auto np = s.value("n_params", std::size_t{0});
        csv << parse_number(values[i], "") << ',' << results[i].exit_code << ',' << s.value("status", "")
            << ',' << np << ',' << s.value("train_loss", 0.0) << ',' << s.value("iterations", 0L) << '\n';
        if (results[i].exit_code == ConfigFailure || results[i].exit_code == NumericFailure)
            code = std::max(code, results[i].exit_code);
        if (prev && np > *prev) {
            ++rises;
            worst = std::max(worst, static_cast<double>(np - *prev) / static_cast<double>(*prev));
        }
        prev = np;
    }
    return {code, dir, {{"param", param}, {"runs", runs}, {"n_params_rises", rises}, {"largest_rise", worst}}};
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"example1-d1", "example1-d2", "example1-d3", "example2", "example3", "csv"};
}

json preset(const std::string& name) {
    json p = base_tree();
    p["preset"] = name;
    if (name == "example1-d1") {
    } else if (name == "example1-d2") {
        p["data"]["variant"] = "D2";
    } else if (name == "example1-d3") {
        p["data"]["variant"] = "D3";
        p["growth"]["epsilon"] = 0.025;
    } else if (name == "example2") {
        p["data"]["source"] = "example2";
        p["growth"]["epsilon"] = 0.005;
        p["growth"]["m_init"] = 2;
    } else if (name == "example3") {
        p["data"]["source"] = "autoregression";
        p["growth"]["epsilon"] = 0.02;
        p["growth"]["learning_rate"] = 0.0001;
        p["growth"]["m_init"] = 2;
        p["estimator"]["learning_rate"] = 0.0001;
    } else if (name == "csv") {
        p["data"]["source"] = "csv";
        p["data"]["csv"]["lag_target"] = true;
        p["grid"] = {{"domain_low", nullptr}, {"domain_high", nullptr}, {"margin", 0.0}, {"clamp_low", nullptr}};
        p["estimator"]["kappa"] = "2/3";
        p["estimator"]["kappa_mode"] = "per_axis";
        p["wavelet"]["family"] = "mexican_hat";
        p["estimator"]["learning_rate"] = 0.001;
        p["growth"]["epsilon"] = 0.015;
        p["growth"]["learning_rate"] = 3e-6;
        p["growth"]["m_init"] = 0;
        p["diag"]["box"] = nullptr;
        p["diag"]["unimodality"] = false;
    } else {
        std::string list;
        for (const auto& n : preset_names())
            list += (list.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (known: " + list + ")");
    }
    return p;
}

void merge_into(json& base, const json& patch, const std::string& prefix) {
    if (!patch.is_object())
        throw ConfigError("config" + (prefix.empty() ? std::string() : " field '" + prefix + "'") +
                          " must be an object");
    for (const auto& [key, value] : patch.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!base.contains(key))
            throw ConfigError("unknown field '" + path + "'");
        json& slot = base[key];
        if (slot.is_object() && value.is_object())
            merge_into(slot, value, path);
        else if (slot.is_object() && !value.is_null())
            throw ConfigError("field '" + path + "' must be an object");
        else
            slot = value;
    }
}

void set_path(json& cfg, const std::string& path, const std::string& text) {
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    json patch = value;
    std::size_t end = path.size();
    for (;;) {
        const auto dot = path.rfind('.', end - 1);
        const std::string key = path.substr(dot == std::string::npos ? 0 : dot + 1,
                                            end - (dot == std::string::npos ? 0 : dot + 1));
        if (key.empty())
            throw ConfigError("bad field path '" + path + "'");
        patch = json{{key, patch}};
        if (dot == std::string::npos || dot == 0)
            break;
        end = dot;
    }
    merge_into(cfg, patch);
}

json resolve(const std::optional<std::string>& preset_name, const std::optional<fs::path>& config_file,
             const std::vector<std::pair<std::string, std::string>>& overrides) {
    json file;
    if (config_file) {
        std::ifstream in(*config_file);
        if (!in)
            throw ConfigError("cannot read config file '" + config_file->string() + "'");
        try {
            file = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config file '" + config_file->string() + "' is not valid JSON: " + e.what());
        }
        if (!file.is_object())
            throw ConfigError("config file '" + config_file->string() + "' must hold an object");
    }
    std::string name = "example1-d1";
    if (preset_name)
        name = *preset_name;
    else if (file.contains("preset"))
        name = file["preset"].is_string() ? file["preset"].get<std::string>() : "";
    json cfg = preset(name);
    if (!file.is_null()) {
        file.erase("preset");
        merge_into(cfg, file);
    }
    for (const auto& [k, v] : overrides)
        set_path(cfg, k, v);
    return cfg;
}

fs::path default_output_root() {
    if (const char* root = std::getenv("CWNN_OUTPUT_ROOT"); root && *root)
        return root;
    return "runs";
}

Outcome run(const std::string& command, json cfg, const fs::path& dir, std::ostream& out, std::ostream& err) {
    Outcome o{Ok, dir, {}};
    try {
        fs::create_directories(dir);
        cfg["command"] = command;
        write_text(dir / "config.json", cfg.dump(2) + "\n");
        if (command == "estimate-freq")
            o = cmd_estimate(cfg, dir, out, err);
        else if (command == "fit")
            o = cmd_fit(cfg, dir, out, err);
        else if (command == "online")
            o = cmd_online(cfg, dir, out, err);
        else if (command == "diag")
            o = cmd_diag(cfg, dir, out, err);
        else if (command == "sweep")
            o = cmd_sweep(cfg, dir, out, err);
        else
            throw ConfigError("unknown command '" + command + "'");
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        o = {NumericFailure, dir, {{"error", e.what()}, {"iteration", e.iteration()}}};
    } catch (const QuadratureError& e) {
        err << "numeric failure: " << e.what() << '\n';
        o = {NumericFailure, dir, {{"error", e.what()}, {"coarse", e.coarse()}, {"fine", e.fine()}}};
    } catch (const Error& e) {
        // ConfigError, ContractError and DataError all trace back to the inputs
        err << "configuration error: " << e.what() << '\n';
        o = {ConfigFailure, dir, {{"error", e.what()}}};
    } catch (const fs::filesystem_error& e) {
        err << "configuration error: " << e.what() << '\n';
        o = {ConfigFailure, dir, {{"error", e.what()}}};
    }
    o.summary["command"] = command;
    o.summary["exit_code"] = o.exit_code;
    try {
        write_text(dir / "summary.json", o.summary.dump(2) + "\n");
    } catch (const Error& e) {
        err << e.what() << '\n';
        if (o.exit_code == Ok)
            o.exit_code = ConfigFailure;
    }
    return o;
}

}  // namespace cwnn::app
