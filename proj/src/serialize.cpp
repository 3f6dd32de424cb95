#include "ilab/serialize.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ilab {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

}  // namespace

json mdp_to_json(const TabularMDP& m) {
    json trans = json::array();
    for (int s = 0; s < m.num_states; ++s) {
        json per_a = json::array();
        for (int a = 0; a < m.num_actions; ++a) {
            json row = json::array();
            for (int s2 = 0; s2 < m.num_states; ++s2) row.push_back(m.p(s, a, s2));
            per_a.push_back(std::move(row));
        }
        trans.push_back(std::move(per_a));
    }
    return json{{"num_states", m.num_states}, {"num_actions", m.num_actions},
                {"transition", std::move(trans)}, {"cost", m.cost},
                {"initial_dist", m.initial_dist}, {"horizon", m.horizon}};
}

TabularMDP mdp_from_json(const json& j) {
    TabularMDP m;
    m.num_states = j.at("num_states").get<int>();
    m.num_actions = j.at("num_actions").get<int>();
    m.horizon = j.at("horizon").get<int>();
    m.cost = j.at("cost").get<std::vector<double>>();
    m.initial_dist = j.at("initial_dist").get<std::vector<double>>();
    const auto& trans = j.at("transition");
    m.transition.assign(static_cast<std::size_t>(m.num_states) * m.num_actions * m.num_states, 0.0);
    for (int s = 0; s < m.num_states; ++s)
        for (int a = 0; a < m.num_actions; ++a)
            for (int s2 = 0; s2 < m.num_states; ++s2)
                m.row_mut(s, a)[s2] = trans.at(s).at(a).at(s2).get<double>();
    return m;
}

json policy_to_json(const Policy& p) {
    json rows = json::array();
    for (int s = 0; s < p.num_states; ++s) {
        json row = json::array();
        for (int a = 0; a < p.num_actions; ++a) row.push_back(p.prob(s, a));
        rows.push_back(std::move(row));
    }
    return json{{"num_states", p.num_states}, {"num_actions", p.num_actions},
                {"action_dist", std::move(rows)}};
}

Policy policy_from_json(const json& j) {
    Policy p;
    p.num_states = j.at("num_states").get<int>();
    p.num_actions = j.at("num_actions").get<int>();
    p.action_dist.resize(static_cast<std::size_t>(p.num_states) * p.num_actions);
    for (int s = 0; s < p.num_states; ++s)
        for (int a = 0; a < p.num_actions; ++a)
            p.action_dist[static_cast<std::size_t>(s) * p.num_actions + a] =
                j.at("action_dist").at(s).at(a).get<double>();
    return p;
}

json bundle_to_json(const EnvBundle& b) {
    return json{{"name", b.name},
                {"mdp", mdp_to_json(b.mdp)},
                {"expert", policy_to_json(b.expert)},
                {"cell_of", b.learner_class.cell_of},
                {"num_cells", b.learner_class.num_cells},
                {"label", b.label},
                {"params", b.params}};
}

EnvBundle bundle_from_json(const json& j) {
    EnvBundle b;
    b.name = j.at("name").get<std::string>();
    b.mdp = mdp_from_json(j.at("mdp"));
    b.expert = policy_from_json(j.at("expert"));
    b.learner_class.cell_of = j.at("cell_of").get<std::vector<int>>();
    b.learner_class.num_cells = j.at("num_cells").get<int>();
    b.label = j.at("label").get<std::string>();
    b.params = j.at("params").get<std::map<std::string, double>>();
    return b;
}

std::string trajectories_to_csv(const std::vector<Trajectory>& trs) {
    std::ostringstream os;
    os << "seed,t,s,a\n";
    for (const Trajectory& tr : trs)
        for (const auto& [t, s, a] : tr.steps)
            os << tr.seed_id << "," << t << "," << s << "," << a << "\n";
    return os.str();
}

std::vector<Trajectory> trajectories_from_csv(const std::string& csv) {
    std::vector<Trajectory> out;
    const auto rows = lines_of(csv);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split_csv_line(rows[i]);
        if (f.size() != 4) throw std::invalid_argument("trajectory CSV: bad row " + rows[i]);
        const int t = std::stoi(f[1]);
        if (t == 1 || out.empty()) {
            out.push_back({});
            out.back().seed_id = std::stoull(f[0]);
        }
        out.back().steps.push_back({t, std::stoi(f[2]), std::stoi(f[3])});
    }
    return out;
}

static const char* kSweepHeader =
    "env,params,T,algo,seed,regret,mismatch,epsilon,gamma,C,u,ibe,bound_thm,bound_rhs,holds,slack,"
    "error";

std::string sweep_to_csv(const SweepResult& sweep) {
    std::ostringstream os;
    os << kSweepHeader << "\n";
    for (const SweepRow& r : sweep.rows) {
        os << csv_field(r.env) << "," << csv_field(r.params) << "," << r.T << ","
           << csv_field(r.algo) << "," << r.seed << "," << fmt_double(r.regret) << ","
           << fmt_double(r.mismatch) << "," << fmt_double(r.epsilon) << "," << fmt_double(r.gamma)
           << "," << fmt_double(r.density_ratio) << "," << fmt_double(r.advantage_bound) << ","
           << fmt_double(r.ibe) << "," << csv_field(r.bound_thm) << "," << fmt_double(r.bound_rhs)
           << "," << (r.holds ? "true" : "false") << "," << fmt_double(r.slack) << ","
           << csv_field(r.error) << "\n";
    }
    return os.str();
}

SweepResult sweep_from_csv(const std::string& csv) {
    SweepResult out;
    const auto rows = lines_of(csv);
    if (rows.empty() || rows[0] != kSweepHeader)
        throw std::invalid_argument("sweep CSV: unrecognized header");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split_csv_line(rows[i]);
        if (f.size() != 17) throw std::invalid_argument("sweep CSV: bad row " + rows[i]);
        SweepRow r;
        r.env = f[0];
        r.params = f[1];
        r.T = std::stoi(f[2]);
        r.algo = f[3];
        r.seed = std::stoull(f[4]);
        r.regret = std::stod(f[5]);
        r.mismatch = std::stod(f[6]);
        r.epsilon = std::stod(f[7]);
        r.gamma = std::stod(f[8]);
        r.density_ratio = std::stod(f[9]);
        r.advantage_bound = std::stod(f[10]);
        r.ibe = std::stod(f[11]);
        r.bound_thm = f[12];
        r.bound_rhs = std::stod(f[13]);
        r.holds = f[14] == "true";
        r.slack = std::stod(f[15]);
        r.error = f[16];
        out.rows.push_back(std::move(r));
    }
    return out;
}

std::string train_report_to_csv(const TrainReport& rep) {
    std::ostringstream os;
    os << "iteration,train_loss,validation\n";
    for (const auto& row : rep.per_iteration)
        os << row.iteration << "," << fmt_double(row.loss) << "," << fmt_double(row.validation)
           << "\n";
    return os.str();
}

std::string exponent_fits_to_csv(const std::vector<std::pair<std::string, std::string>>& keys,
                                 const std::vector<ExponentFit>& fits) {
    std::ostringstream os;
    os << "env,algo,beta,intercept,r2,n_points,n_excluded\n";
    for (std::size_t i = 0; i < fits.size(); ++i)
        os << csv_field(keys[i].first) << "," << csv_field(keys[i].second) << ","
           << fmt_double(fits[i].beta) << "," << fmt_double(fits[i].intercept) << ","
           << fmt_double(fits[i].r_squared) << "," << fits[i].n_points << ","
           << fits[i].n_excluded << "\n";
    return os.str();
}

std::string ratio_to_csv(const RatioEstimate& r) {
    std::ostringstream os;
    os << "t,s,value\n";
    for (std::size_t t = 0; t < r.per_step.size(); ++t)
        for (std::size_t s = 0; s < r.per_step[t].size(); ++s)
            os << (t + 1) << "," << s << "," << fmt_double(r.per_step[t][s]) << "\n";
    return os.str();
}

std::string ipm_to_csv(const IpmResult& r) {
    std::ostringstream os;
    os << "cell,value\n";
    os << "-1," << fmt_double(r.value) << "\n";  // cell -1 carries the distance itself
    for (std::size_t c = 0; c < r.witness.size(); ++c)
        os << c << "," << fmt_double(r.witness[c]) << "\n";
    return os.str();
}

json demo_manifest(const DemoSource& d) {
    return json{{"mode", d.mode == DemoSource::Mode::exact ? "exact" : "sampled"},
                {"n", d.trajectories.size()},
                {"seed", d.seed},
                {"horizon", d.horizon},
                {"num_states", d.num_states},
                {"num_actions", d.num_actions},
                {"split", json{{"train", d.train_idx}, {"val", d.val_idx}}}};
}

std::string demo_to_csv(const DemoSource& d) { return trajectories_to_csv(d.trajectories); }

DemoSource demo_from_csv(const std::string& csv, const json& manifest) {
    DemoSource d;
    if (manifest.at("mode").get<std::string>() != "sampled")
        throw std::invalid_argument("demo_from_csv: only sampled demos round-trip through CSV");
    d.mode = DemoSource::Mode::sampled;
    d.seed = manifest.at("seed").get<std::uint64_t>();
    d.horizon = manifest.at("horizon").get<int>();
    d.num_states = manifest.at("num_states").get<int>();
    d.num_actions = manifest.at("num_actions").get<int>();
    d.train_idx = manifest.at("split").at("train").get<std::vector<int>>();
    d.val_idx = manifest.at("split").at("val").get<std::vector<int>>();
    d.trajectories = trajectories_from_csv(csv);
    if (d.trajectories.size() != manifest.at("n").get<std::size_t>())
        throw std::invalid_argument("demo_from_csv: trajectory count does not match manifest");
    return d;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open for writing: " + tmp.string());
        os << content;
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::string config_hash(const json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

}  // namespace ilab
