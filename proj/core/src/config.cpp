#include "cnls/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cnls::driver {

namespace {

std::string default_bump(int dim) {
    std::string r2 = "x1^2";
    for (int a = 2; a <= dim; ++a) r2 += " + x" + std::to_string(a) + "^2";
    return "1 - 0.45*exp(-(" + r2 + "))";
}

}  // namespace

RunConfig RunConfig::defaults(int dim) {
    RunConfig cfg;
    cfg.dim = dim;
    // mirror the theorem regime: mass-supercritical and H1-subcritical. At
    // dim 2 the cubic sits exactly at the L2-critical exponent, where the
    // linearized operator carries scaling quasi-null modes; the quintic is
    // the healthy analog of the 3-d cubic.
    cfg.p = dim == 2 ? 3.0 : 2.0;
    cfg.grid_h = dim == 3 ? 0.4 : 0.15;  // soliton core needs ~8 cells
    cfg.potential_strings = {default_bump(dim), "1", default_bump(dim), "1"};
    cfg.box_lo.assign(static_cast<std::size_t>(dim), -0.8);
    cfg.box_hi.assign(static_cast<std::size_t>(dim), 0.8);
    cfg.Q0.assign(static_cast<std::size_t>(dim), 0.0);
    return cfg;
}

void RunConfig::validate() const {
    if (dim < 1 || dim > 3) throw std::invalid_argument("config: dim must be 1, 2 or 3");
    if (!(beta < 0.0)) throw std::invalid_argument("config: beta must be negative (repulsive case)");
    if (!(p > 1.0)) throw std::invalid_argument("config: p must exceed 1");
    if (dim >= 3 && !(2.0 * p < 2.0 * dim / (dim - 2.0)))
        throw std::invalid_argument("config: p is not subcritical for this dimension");
    if (eps_list.empty()) throw std::invalid_argument("config: eps list is empty");
    for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
        if (!(eps_list[i] > eps_list[i + 1]))
            throw std::invalid_argument("config: eps list must be strictly decreasing");
    for (double e : eps_list)
        if (!(e > 0.0)) throw std::invalid_argument("config: eps values must be positive");
    if (box_lo.size() != static_cast<std::size_t>(dim) || box_hi.size() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("config: box dimension mismatch");
    if (Q0.size() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("config: Q0 dimension mismatch");
    if (grid_h <= 0.0) throw std::invalid_argument("config: grid_h must be positive");
    if (bound_lower <= 0.0) throw std::invalid_argument("config: declared lower bound must be positive");
}

potentials::PotentialSet RunConfig::make_potentials() const {
    std::array<potentials::Bounds, 4> bounds;
    bounds.fill({bound_lower, bound_upper});
    return potentials::PotentialSet::from_strings(potential_strings[0], potential_strings[1],
                                                  potential_strings[2], potential_strings[3], dim,
                                                  bounds);
}

reduce::SessionOptions RunConfig::session_options() const {
    reduce::SessionOptions o;
    o.grid_h = grid_h;
    o.margin = margin;
    o.node_cap = node_cap;
    o.tol_linear = tol_linear;
    o.max_linear_iter = max_linear_iter;
    o.tol_corrector = tol_corrector;
    o.max_corrector_iter = max_corrector_iter;
    o.relinearize = relinearize;
    o.seed = seed;
    return o;
}

std::string RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["dim"] = dim;
    j["p"] = p;
    j["beta"] = beta;
    j["J1"] = potential_strings[0];
    j["J2"] = potential_strings[1];
    j["K1"] = potential_strings[2];
    j["K2"] = potential_strings[3];
    j["box_lo"] = box_lo;
    j["box_hi"] = box_hi;
    j["eps"] = eps_list;
    j["Q0"] = Q0;
    j["grid_h"] = grid_h;
    j["margin"] = margin;
    j["tol_corrector"] = tol_corrector;
    j["tol_newton"] = tol_newton;
    j["tol_linear"] = tol_linear;
    j["seeds_per_axis"] = seeds_per_axis;
    j["seed"] = seed;
    j["sweep_solve"] = sweep_solve;
    j["relinearize"] = relinearize;
    return j.dump();
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

std::vector<double> parse_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw std::invalid_argument("config: empty numeric list");
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: expected a boolean, got '" + v + "'");
}

}  // namespace

void apply_override(RunConfig& cfg, const std::string& key, const std::string& raw) {
    const std::string value = unquote(trim(raw));
    if (key == "dim") {
        const int d = std::stoi(value);
        const bool had_defaults = cfg.box_lo.size() != static_cast<std::size_t>(d);
        cfg.dim = d;
        if (had_defaults) {
            RunConfig fresh = RunConfig::defaults(d);
            cfg.potential_strings = fresh.potential_strings;
            cfg.box_lo = fresh.box_lo;
            cfg.box_hi = fresh.box_hi;
            cfg.Q0 = fresh.Q0;
        }
    } else if (key == "p") cfg.p = std::stod(value);
    else if (key == "beta") cfg.beta = std::stod(value);
    else if (key == "J1") cfg.potential_strings[0] = value;
    else if (key == "J2") cfg.potential_strings[1] = value;
    else if (key == "K1") cfg.potential_strings[2] = value;
    else if (key == "K2") cfg.potential_strings[3] = value;
    else if (key == "box_lo") cfg.box_lo = parse_list(value);
    else if (key == "box_hi") cfg.box_hi = parse_list(value);
    else if (key == "eps") cfg.eps_list = parse_list(value);
    else if (key == "Q0") cfg.Q0 = parse_list(value);
    else if (key == "grid_h") cfg.grid_h = std::stod(value);
    else if (key == "margin") cfg.margin = std::stod(value);
    else if (key == "bound_lower") cfg.bound_lower = std::stod(value);
    else if (key == "bound_upper") cfg.bound_upper = std::stod(value);
    else if (key == "tol_corrector") cfg.tol_corrector = std::stod(value);
    else if (key == "tol_newton") cfg.tol_newton = std::stod(value);
    else if (key == "tol_linear") cfg.tol_linear = std::stod(value);
    else if (key == "max_corrector_iter") cfg.max_corrector_iter = std::stoi(value);
    else if (key == "max_newton_iter") cfg.max_newton_iter = std::stoi(value);
    else if (key == "max_linear_iter") cfg.max_linear_iter = std::stoi(value);
    else if (key == "seeds_per_axis") cfg.seeds_per_axis = std::stoi(value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "node_cap") cfg.node_cap = static_cast<std::size_t>(std::stoull(value));
    else if (key == "sweep_solve") cfg.sweep_solve = parse_bool(value);
    else if (key == "relinearize") cfg.relinearize = parse_bool(value);
    else if (key == "out") cfg.out_dir = value;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig parse_config_text(const std::string& text) {
    // first pass picks up dim so defaults land in the right dimension
    RunConfig cfg = RunConfig::defaults(2);
    std::istringstream lines(text);
    std::string line;
    std::vector<std::pair<std::string, std::string>> kvs;
    while (std::getline(lines, line)) {
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;  // section headers ignored
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value, got '" + line + "'");
        kvs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    for (const auto& [k, v] : kvs)
        if (k == "dim") cfg = RunConfig::defaults(std::stoi(unquote(v)));
    for (const auto& [k, v] : kvs)
        if (k != "dim") apply_override(cfg, k, v);
    cfg.validate();
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace cnls::driver
