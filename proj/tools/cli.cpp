#include "cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "flowmap/analysis.hpp"
#include "flowmap/format.hpp"
#include "flowmap/polyflow.hpp"
#include "flowmap/settings.hpp"
#include "flowmap/steane.hpp"
#include "flowmap/tmr.hpp"
#include "svg.hpp"

namespace flowmap::cli {

using nlohmann::json;

namespace {

constexpr const char* kTool = "flowmap 0.1.0";

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read '" + path + "'");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) {
        throw InputError("cannot write '" + path + "'");
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        if (!cur.empty()) {
            parts.push_back(cur);
        }
    }
    return parts;
}

double parse_number(const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw InputError("not a number: '" + text + "'");
}

// "a=0.1,b=0.2" over `variables`; absent names are zero.
FailureVector parse_point(const std::string& text, const std::vector<std::string>& variables) {
    std::vector<double> values(variables.size(), 0.0);
    for (const auto& item : split(text, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw InputError("expected name=value, got '" + item + "'");
        }
        const auto name = item.substr(0, eq);
        const auto it = std::find(variables.begin(), variables.end(), name);
        if (it == variables.end()) {
            throw VariableBindingError("unknown location '" + name + "'");
        }
        values[it - variables.begin()] = parse_number(item.substr(eq + 1));
    }
    return FailureVector(variables, values);
}

std::pair<std::string, std::string> parse_plane(const std::string& text,
                                                const std::vector<std::string>& variables) {
    if (text.empty()) {
        if (variables.size() < 2) {
            throw InputError("a plane needs a map with at least two locations");
        }
        return {variables[0], variables[1]};
    }
    const auto parts = split(text, ',');
    if (parts.size() != 2) {
        throw InputError("--plane expects two comma-separated locations");
    }
    return {parts[0], parts[1]};
}

steane::EcOptions ec_options(const RunConfig& c) {
    steane::EcOptions o;
    if (c.schedule == "sequential") {
        o.schedule = steane::Schedule::sequential;
    } else if (c.schedule == "pipelined") {
        o.schedule = steane::Schedule::pipelined;
    } else {
        throw InputError("unknown schedule '" + c.schedule + "' (sequential or pipelined)");
    }
    o.hadamard_plus_prep = c.hadamard_prep;
    return o;
}

struct Source {
    std::optional<FlowMap> map;
    bool mc = false;
    std::vector<std::string> variables;
    std::string hash;
};

Source load_source(const RunConfig& c) {
    Source s;
    if (c.source == "builtin:tmr") {
        s.map = tmr::tmr_flow_map();
    } else if (c.source == "builtin:uv-example") {
        s.map = uv_example_map();
    } else if (c.source.rfind("file:", 0) == 0) {
        s.map = parse_flowmap(read_file(c.source.substr(5)));
    } else if (c.source == "mc:steane") {
        s.mc = true;
        s.variables = steane::location_names();
        std::string text;
        for (std::size_t k = 0; k < steane::kKinds; ++k) {
            text += steane::build_exrec(static_cast<steane::LocationKind>(k), ec_options(c))
                        .schedule_text();
        }
        s.hash = fnv1a_hex(text);
        return s;
    } else {
        throw InputError("unknown source '" + c.source +
                         "' (builtin:tmr, builtin:uv-example, file:<path> or mc:steane)");
    }
    s.variables = s.map->variables();
    s.hash = flowmap_hash(*s.map);
    return s;
}

const FlowMap& need_map(const Source& s, const std::string& command) {
    if (!s.map) {
        throw InputError(command + " needs a closed-form map source, not mc:steane");
    }
    return *s.map;
}

void need_mc(const RunConfig& c) {
    if (!c.has_seed) {
        throw InputError("Monte-Carlo runs require --seed");
    }
    if (c.trials < 1) {
        throw InputError("Monte-Carlo runs require --trials >= 1");
    }
}

// Fills per-command defaults so the embedded config is complete.
void normalize(RunConfig& c) {
    const bool quantum = c.source == "mc:steane";
    if (c.command == "mc-trip") {
        if (c.source == "builtin:tmr") {
            c.source = "mc:steane";
        }
        if (c.location.empty()) {
            c.location = "1";
        }
        if (c.setting.empty()) {
            c.setting = "steane";
        }
        if (c.grid.empty()) {
            c.grid = "1e-6:1e-1:21:log";
        }
        if (c.trials == 0) {
            c.trials = 100000;
        }
    }
    if (c.setting.empty()) {
        c.setting = "diagonal";
    }
    if (c.command == "trip") {
        if (c.levels.empty()) {
            c.levels = {1, 2, 3};
        }
        if (c.grid.empty()) {
            c.grid = "0:0.5:201";
        }
    }
    if (c.command == "tifd") {
        if (c.grid.empty()) {
            c.grid = quantum ? "1e-4:1e-2:11:log" : "0:1:21";
        }
        if (c.ygrid.empty()) {
            c.ygrid = c.grid;
        }
    }
    if (c.command == "threshold-set" && c.grid.empty()) {
        c.grid = "0:0.5:200";
    }
    if (c.level == 0) {
        c.level = c.command == "trajectory" ? 20 : 1;
    }
}

json tolerances() {
    const ScanOptions scan;
    const ConvergenceOptions conv;
    const FixedPointOptions fp;
    return {{"scan",
             {{"gamma_min", scan.gamma_min},
              {"gamma_max", scan.gamma_max},
              {"points", scan.points},
              {"rel_tol", scan.rel_tol}}},
            {"convergence",
             {{"epsilon", conv.epsilon},
              {"max_level", conv.max_level},
              {"escape", conv.escape},
              {"stall", conv.stall}}},
            {"fixed_point_residual", fp.residual_tol},
            {"asymptotic_rel_tol", 1e-6}};
}

struct Context {
    RunConfig config;
    Source source;
    std::optional<Setting> setting;
    std::ostream* summary = nullptr;

    json provenance() const {
        json p;
        p["tool"] = kTool;
        p["config"] = to_json(config);
        p["map_hash"] = source.hash;
        p["setting"] = setting ? json::parse(serialize_setting(*setting)) : json(nullptr);
        p["tolerances"] = tolerances();
        return p;
    }

    std::string csv_header(const std::string& columns) const {
        return "# provenance: " + provenance().dump() + "\n" + columns + "\n";
    }

    const Setting& need_setting() {
        if (!setting) {
            setting = resolve_setting(config.setting, source.variables);
        }
        return *setting;
    }
};

void emit(const Context& ctx, const std::string& artifact, std::ostream& out) {
    if (ctx.config.out.empty()) {
        out << artifact;
    } else {
        write_file(ctx.config.out, artifact);
    }
}

void emit_svg(const Context& ctx, const std::string& svg) {
    if (!ctx.config.svg.empty()) {
        write_file(ctx.config.svg, svg);
    }
}

std::string require_location(const Context& ctx) {
    if (ctx.config.location.empty()) {
        throw InputError(ctx.config.command + " requires --location");
    }
    const auto& v = ctx.source.variables;
    if (std::find(v.begin(), v.end(), ctx.config.location) == v.end()) {
        throw VariableBindingError("location '" + ctx.config.location + "' is not in the map");
    }
    return ctx.config.location;
}

int cmd_derive_map(Context& ctx, std::ostream& out) {
    const FlowMap& f = need_map(ctx.source, "derive-map");
    json doc = json::parse(serialize_flowmap(f));
    doc["provenance"] = ctx.provenance();
    emit(ctx, doc.dump(2) + "\n", out);
    if (!ctx.config.netlist.empty()) {
        if (ctx.config.source != "builtin:tmr") {
            throw InputError("--netlist is only available for builtin:tmr");
        }
        std::string text;
        for (auto k : {tmr::Kind::wire, tmr::Kind::voter, tmr::Kind::fanout}) {
            text += tmr::build_replacement(k).netlist() + "\n";
        }
        write_file(ctx.config.netlist, text);
    }
    auto& s = *ctx.summary;
    s << "map " << ctx.source.hash << " over {";
    for (std::size_t i = 0; i < f.dimension(); ++i) {
        s << (i ? "," : "") << f.variables()[i];
    }
    s << "}\n";
    for (std::size_t i = 0; i < f.dimension(); ++i) {
        s << "  " << f.variables()[i] << " -> " << f.component(i).to_string() << "\n";
    }
    return kExitOk;
}

int cmd_fixed_points(Context& ctx, std::ostream& out) {
    const FlowMap& f = need_map(ctx.source, "fixed-points");
    const auto points = fixed_points(f, Region::unit(f.dimension()));
    std::string columns;
    for (const auto& v : f.variables()) {
        columns += v + ",";
    }
    std::string body = ctx.csv_header(columns + "residual");
    for (const auto& p : points) {
        const auto image = eval_map(f, p);
        double residual = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            residual = std::max(residual, std::abs(image.values()[i] - p.values()[i]));
            body += format_double(p.values()[i]) + ",";
        }
        body += format_double(residual) + "\n";
    }
    emit(ctx, body, out);
    *ctx.summary << points.size() << " fixed points in the unit box\n";
    for (const auto& p : points) {
        *ctx.summary << "  " << p.to_string() << "\n";
    }
    return kExitOk;
}

std::string threshold_row(const PseudothresholdResult& r) {
    return r.location + "," + std::to_string(r.level) + "," + r.setting + "," +
           format_double(r.value) + "," + format_double(r.lo) + "," + format_double(r.hi) + "," +
           (r.touches_scan_bound ? "true" : "false") + "\n";
}

int cmd_pseudothreshold(Context& ctx, std::ostream& out) {
    const FlowMap& f = need_map(ctx.source, "pseudothreshold");
    const auto loc = require_location(ctx);
    const auto& g = ctx.need_setting();
    std::string body = ctx.csv_header("location,level,setting,value,lo,hi,touches_scan_bound");
    auto& s = *ctx.summary;
    if (ctx.config.asymptotic) {
        const auto a = asymptotic_location_threshold(f, loc, g);
        for (const auto& r : a.sequence) {
            body += threshold_row(r);
        }
        emit(ctx, body, out);
        if (!a.converged) {
            s << "no convergence: " << a.message << "\n";
            return kExitNoConvergence;
        }
        s << "asymptotic threshold of " << loc << " under " << g.name() << ": "
          << format_double(a.value) << " (agreed at level " << a.level << ")\n";
        return kExitOk;
    }
    if (ctx.config.level < 1) {
        throw InputError("--level must be at least 1");
    }
    const auto r = pseudothreshold(f, loc, g, ctx.config.level);
    body += threshold_row(r);
    emit(ctx, body, out);
    if (!r.found) {
        s << "no pseudothreshold: " << r.message << "\n";
        return kExitNoConvergence;
    }
    s << "pseudothreshold of " << loc << " at level " << r.level << " under " << g.name() << ": "
      << format_double(r.value) << (r.touches_scan_bound ? " (touches the scan bound)" : "") << "\n";
    return kExitOk;
}

int cmd_trip(Context& ctx, std::ostream& out) {
    const FlowMap& f = need_map(ctx.source, "trip");
    const auto loc = require_location(ctx);
    const auto& g = ctx.need_setting();
    const auto grid = GammaGrid::parse(ctx.config.grid);
    const auto curves = trip_curves(f, loc, g, ctx.config.levels, grid.points(), ctx.config.threads);
    std::string body = ctx.csv_header("gamma,level,value");
    for (const auto& c : curves) {
        for (const auto& [x, y] : c.samples) {
            body += format_double(x) + "," + std::to_string(c.level) + "," + format_double(y) + "\n";
        }
    }
    emit(ctx, body, out);
    emit_svg(ctx, trip_svg(curves, "TRIP " + loc + " (" + g.name() + ")", grid.log));
    for (const auto& c : curves) {
        *ctx.summary << "level " << c.level << " crossings:";
        for (double x : c.crossings) {
            *ctx.summary << " " << format_double(x);
        }
        *ctx.summary << "\n";
    }
    return kExitOk;
}

int cmd_tifd(Context& ctx, std::ostream& out) {
    const auto plane = parse_plane(ctx.config.plane, ctx.source.variables);
    const auto fixed = parse_point(ctx.config.fixed, ctx.source.variables);
    const auto xg = GammaGrid::parse(ctx.config.grid);
    const auto yg = GammaGrid::parse(ctx.config.ygrid);
    TifdField field;
    if (ctx.source.mc) {
        need_mc(ctx.config);
        const auto eval = steane::mc_evaluator(ctx.config.trials, ctx.config.seed,
                                               ec_options(ctx.config), ctx.config.threads);
        field = tifd_field(eval, ctx.source.variables, plane, fixed, xg, yg, 1);
    } else {
        field = tifd_field(*ctx.source.map, plane, fixed, xg, yg, ctx.config.threads);
    }
    std::string body = ctx.csv_header("x,y,dx,dy,magnitude");
    for (const auto& s : field.grid) {
        body += format_double(s.x) + "," + format_double(s.y) + "," + format_double(s.dx) + "," +
                format_double(s.dy) + "," + format_double(s.magnitude) + "\n";
    }
    emit(ctx, body, out);
    emit_svg(ctx, tifd_svg(field));
    *ctx.summary << "TIFD " << field.nx << "x" << field.ny << " on (" << plane.first << ","
                 << plane.second << ")\n";
    return kExitOk;
}

int cmd_threshold_set(Context& ctx, std::ostream& out) {
    const FlowMap& f = need_map(ctx.source, "threshold-set");
    const auto plane = parse_plane(ctx.config.plane, ctx.source.variables);
    const auto grid = GammaGrid::parse(ctx.config.grid);
    if (grid.log) {
        throw InputError("threshold-set needs a linear grid");
    }
    ThresholdSlice slice;
    slice.x_var = plane.first;
    slice.y_var = plane.second;
    slice.x_lo = slice.y_lo = grid.lo;
    slice.x_hi = slice.y_hi = grid.hi;
    slice.fixed = parse_point(ctx.config.fixed, ctx.source.variables);
    const auto r = threshold_set(f, slice, grid.n, {}, ctx.config.threads);
    std::string body = ctx.csv_header("x,y,class");
    for (std::size_t j = 0; j < r.ys.size(); ++j) {
        for (std::size_t i = 0; i < r.xs.size(); ++i) {
            body += format_double(r.xs[i]) + "," + format_double(r.ys[j]) + "," +
                    std::string(to_string(r.at(i, j))) + "\n";
        }
    }
    emit(ctx, body, out);
    emit_svg(ctx, threshold_svg(r));
    auto& s = *ctx.summary;
    s << "nodes below/above/undetermined: " << r.below_count << "/" << r.above_count << "/"
      << r.undetermined_count << "\n";
    s << "largest cube edge: " << format_double(r.largest_cube_edge) << " (grid step "
      << format_double(r.x_step) << ")\n";
    s << "ray violations: " << r.ray_violations << " of " << r.ray_checks
      << ", hull mismatch: " << format_double(r.hull_mismatch) << "\n";
    return kExitOk;
}

int cmd_axis_bound(Context& ctx, std::ostream& out) {
    const FlowMap& f = need_map(ctx.source, "axis-bound");
    const auto c = conjecture_check(f, ctx.config.resolution, {}, ctx.config.threads);
    std::string body = ctx.csv_header("quantity,value");
    for (const auto& r : c.bound.per_axis) {
        body += "pseudothreshold:" + r.location + "," + format_double(r.value) + "\n";
    }
    body += "axis_bound," + format_double(c.bound.value) + "\n";
    body += "cube_edge," + format_double(c.cube_edge) + "\n";
    body += "cube_resolution," + format_double(c.resolution) + "\n";
    body += std::string("holds,") + (c.holds ? "true" : "false") + "\n";
    emit(ctx, body, out);
    auto& s = *ctx.summary;
    for (const auto& r : c.bound.per_axis) {
        s << "  axis " << r.location << ": "
          << (r.found ? format_double(r.value) : std::string("none")) << "\n";
    }
    s << (c.holds ? "conjecture holds: " : "finding: conjecture violated: ") << c.finding << "\n";
    return c.bound.found ? kExitOk : kExitNoConvergence;
}

int cmd_mc_trip(Context& ctx, std::ostream& out) {
    if (!ctx.source.mc) {
        throw InputError("mc-trip needs --source mc:steane");
    }
    need_mc(ctx.config);
    const auto kind = steane::parse_kind(ctx.config.location);
    const auto& g = ctx.need_setting();
    const auto grid = GammaGrid::parse(ctx.config.grid);
    const auto opts = ec_options(ctx.config);
    if (!ctx.config.netlist.empty()) {
        write_file(ctx.config.netlist, steane::build_exrec(kind, opts).schedule_text());
    }
    const auto trip = steane::mc_trip(kind, g, grid.points(), ctx.config.trials, ctx.config.seed,
                                      opts, ctx.config.threads);
    std::string body = ctx.csv_header("gamma,trials,failures,p_hat,stderr");
    for (std::size_t i = 0; i < trip.estimates.size(); ++i) {
        const auto& e = trip.estimates[i];
        body += format_double(trip.curve.samples[i].first) + "," + std::to_string(e.trials) + "," +
                std::to_string(e.failures) + "," + format_double(e.p_hat) + "," +
                format_double(e.stderr_) + "\n";
    }
    emit(ctx, body, out);
    emit_svg(ctx, trip_svg({trip.curve}, "MC TRIP exRec(" + trip.kind + ") (" + g.name() + ")",
                           grid.log));
    auto& s = *ctx.summary;
    s << "exRec(" << trip.kind << ") under " << g.name() << ", " << ctx.config.trials
      << " trials per point, seed " << ctx.config.seed << "\n";
    s << "crossings:";
    for (double x : trip.curve.crossings) {
        s << " " << format_double(x);
    }
    s << "\n";
    if (trip.estimates.size() >= 5) {
        const auto fit = steane::fit_pseudothreshold(trip.estimates, ctx.config.cubic);
        if (fit.found) {
            s << "fitted pseudothreshold: " << format_double(fit.value) << " [" << format_double(fit.ci_lo)
              << ", " << format_double(fit.ci_hi) << "]\n";
        } else {
            s << "fit: " << fit.message << "\n";
        }
    }
    return kExitOk;
}

int cmd_trajectory(Context& ctx, std::ostream& out) {
    const FlowMap& f = need_map(ctx.source, "trajectory");
    if (ctx.config.start.empty()) {
        throw InputError("trajectory requires --start");
    }
    const auto start = parse_point(ctx.config.start, f.variables());
    const auto orbit = trajectory(f, start, ctx.config.level);
    std::string columns = "level";
    for (const auto& v : f.variables()) {
        columns += "," + v;
    }
    std::string body = ctx.csv_header(columns);
    for (std::size_t k = 0; k < orbit.size(); ++k) {
        body += std::to_string(k);
        for (double v : orbit[k].values()) {
            body += "," + format_double(v);
        }
        body += "\n";
    }
    emit(ctx, body, out);
    *ctx.summary << orbit.size() - 1 << " steps, final " << orbit.back().to_string() << "\n";
    return kExitOk;
}

int dispatch(RunConfig config, std::ostream& out, std::ostream& err) {
    normalize(config);
    Context ctx;
    ctx.config = std::move(config);
    ctx.source = load_source(ctx.config);
    ctx.summary = ctx.config.out.empty() ? &err : &out;
    const auto& cmd = ctx.config.command;
    if (cmd == "derive-map") return cmd_derive_map(ctx, out);
    if (cmd == "fixed-points") return cmd_fixed_points(ctx, out);
    if (cmd == "pseudothreshold") return cmd_pseudothreshold(ctx, out);
    if (cmd == "trip") return cmd_trip(ctx, out);
    if (cmd == "tifd") return cmd_tifd(ctx, out);
    if (cmd == "threshold-set") return cmd_threshold_set(ctx, out);
    if (cmd == "axis-bound") return cmd_axis_bound(ctx, out);
    if (cmd == "mc-trip") return cmd_mc_trip(ctx, out);
    if (cmd == "trajectory") return cmd_trajectory(ctx, out);
    throw InputError("unknown command '" + cmd + "'");
}

void add_common(CLI::App* sub, RunConfig& c) {
    sub->add_option("--source", c.source, "builtin:tmr | builtin:uv-example | file:<path> | mc:steane");
    sub->add_option("--out", c.out, "artifact path (default: stdout)");
    sub->add_option("--threads", c.threads, "worker threads (default: FLOWMAP_THREADS or 1)");
}

}  // namespace

json to_json(const RunConfig& c) {
    return {{"command", c.command},
            {"source", c.source},
            {"location", c.location},
            {"setting", c.setting},
            {"level", c.level},
            {"levels", c.levels},
            {"grid", c.grid},
            {"ygrid", c.ygrid},
            {"resolution", c.resolution},
            {"trials", c.trials},
            {"seed", c.has_seed ? json(c.seed) : json(nullptr)},
            {"plane", c.plane},
            {"fixed", c.fixed},
            {"start", c.start},
            {"schedule", c.schedule},
            {"hadamard_prep", c.hadamard_prep},
            {"asymptotic", c.asymptotic},
            {"cubic", c.cubic}};
}

RunConfig config_from_json(const json& j) {
    if (!j.is_object() || !j.contains("command")) {
        throw InputError("provenance config is missing 'command'");
    }
    RunConfig c;
    try {
        j.at("command").get_to(c.command);
        j.at("source").get_to(c.source);
        j.at("location").get_to(c.location);
        j.at("setting").get_to(c.setting);
        j.at("level").get_to(c.level);
        j.at("levels").get_to(c.levels);
        j.at("grid").get_to(c.grid);
        j.at("ygrid").get_to(c.ygrid);
        j.at("resolution").get_to(c.resolution);
        j.at("trials").get_to(c.trials);
        if (!j.at("seed").is_null()) {
            c.has_seed = true;
            j.at("seed").get_to(c.seed);
        }
        j.at("plane").get_to(c.plane);
        j.at("fixed").get_to(c.fixed);
        j.at("start").get_to(c.start);
        j.at("schedule").get_to(c.schedule);
        j.at("hadamard_prep").get_to(c.hadamard_prep);
        j.at("asymptotic").get_to(c.asymptotic);
        j.at("cubic").get_to(c.cubic);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed provenance config: ") + e.what());
    }
    return c;
}

json read_provenance(const std::string& path) {
    const std::string text = read_file(path);
    const std::string tag = "# provenance: ";
    try {
        if (text.rfind(tag, 0) == 0) {
            return json::parse(text.substr(tag.size(), text.find('\n') - tag.size()));
        }
        const json doc = json::parse(text);
        if (doc.is_object() && doc.contains("provenance")) {
            return doc["provenance"];
        }
    } catch (const json::parse_error& e) {
        throw InputError("'" + path + "': unreadable provenance: " + e.what());
    }
    throw InputError("'" + path + "' has no provenance header");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Flow-map threshold analysis"};
    app.require_subcommand(1);
    RunConfig c;
    std::string replay_path;

    auto* derive = app.add_subcommand("derive-map", "emit the flow map as JSON");
    add_common(derive, c);
    derive->add_option("--netlist", c.netlist, "write the replacement-rule netlists here");

    auto* fixed = app.add_subcommand("fixed-points", "fixed points in the unit box");
    add_common(fixed, c);

    auto* pseudo = app.add_subcommand("pseudothreshold", "least crossing of one concatenated location");
    add_common(pseudo, c);
    pseudo->add_option("--location", c.location)->required();
    pseudo->add_option("--setting", c.setting, "diagonal | steane | axis:<loc> | file:<path>");
    pseudo->add_option("--level", c.level);
    pseudo->add_flag("--asymptotic", c.asymptotic, "iterate levels until the value converges");

    auto* trip = app.add_subcommand("trip", "threshold reliability curves");
    add_common(trip, c);
    trip->add_option("--location", c.location)->required();
    trip->add_option("--setting", c.setting);
    trip->add_option("--levels", c.levels)->delimiter(',');
    trip->add_option("--grid", c.grid, "lo:hi:n[:log]");
    trip->add_option("--svg", c.svg);

    auto* tifd = app.add_subcommand("tifd", "displacement field on a plane");
    add_common(tifd, c);
    tifd->add_option("--plane", c.plane, "x,y");
    tifd->add_option("--fixed", c.fixed, "name=value,... for the other locations");
    tifd->add_option("--grid", c.grid, "lo:hi:n[:log] for x");
    tifd->add_option("--ygrid", c.ygrid, "lo:hi:n[:log] for y (default: --grid)");
    tifd->add_option("--trials", c.trials);
    tifd->add_option("--seed", c.seed)->each([&](const std::string&) { c.has_seed = true; });
    tifd->add_option("--schedule", c.schedule);
    tifd->add_option("--svg", c.svg);

    auto* tset = app.add_subcommand("threshold-set", "classify a grid on a plane");
    add_common(tset, c);
    tset->add_option("--plane", c.plane, "x,y");
    tset->add_option("--fixed", c.fixed);
    tset->add_option("--grid", c.grid, "lo:hi:n, same for both axes");
    tset->add_option("--svg", c.svg);

    auto* axis = app.add_subcommand("axis-bound", "axis pseudothresholds and the largest-cube check");
    add_common(axis, c);
    axis->add_option("--resolution", c.resolution, "nodes per axis for the cube search");

    auto* mc = app.add_subcommand("mc-trip", "Monte-Carlo level-1 TRIP of a Steane exRec");
    add_common(mc, c);
    mc->add_option("--location", c.location, "1 | 2 | w | 1m | p");
    mc->add_option("--setting", c.setting);
    mc->add_option("--grid", c.grid);
    mc->add_option("--trials", c.trials);
    mc->add_option("--seed", c.seed)->each([&](const std::string&) { c.has_seed = true; });
    mc->add_option("--schedule", c.schedule, "sequential | pipelined");
    mc->add_flag("--hadamard-prep", c.hadamard_prep, "prepare |+> as |0> and a Hadamard");
    mc->add_flag("--cubic", c.cubic, "add a cubic term to the fit");
    mc->add_option("--netlist", c.netlist, "write the exRec schedule here");
    mc->add_option("--svg", c.svg);

    auto* traj = app.add_subcommand("trajectory", "orbit of a point under the map");
    add_common(traj, c);
    traj->add_option("--start", c.start, "name=value,...")->required();
    traj->add_option("--level", c.level, "maximum number of steps");

    auto* replay = app.add_subcommand("replay", "re-run the config embedded in an artifact");
    replay->add_option("artifact", replay_path)->required();
    replay->add_option("--out", c.out);
    replay->add_option("--svg", c.svg);
    replay->add_option("--threads", c.threads);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        if (replay->parsed()) {
            RunConfig rc = config_from_json(read_provenance(replay_path).at("config"));
            rc.out = c.out;
            rc.svg = c.svg;
            rc.threads = c.threads;
            return dispatch(rc, out, err);
        }
        c.command = app.get_subcommands().front()->get_name();
        return dispatch(c, out, err);
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
}

}  // namespace flowmap::cli
