#include "himpact/io.hpp"

#include "himpact/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace himpact::io {

namespace fs = std::filesystem;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("io", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail("io", "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) fail("io", "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        fail("io", "cannot rename " + tmp.string() + ": " + ec.message());
    }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    out.push_back(trim(cell));
    return out;
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

} // namespace

CsvTable parse_csv(std::string_view text, const std::string& source) {
    CsvTable t;
    t.source = source;
    std::size_t pos = 0, line_no = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (trim(line).empty() || trim(line)[0] == '#') continue;
        auto cells = split_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            fail("parse", source + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                              " fields, got " + std::to_string(cells.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) fail("parse", source + ": missing CSV header");
    return t;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

std::optional<std::size_t> CsvTable::find(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t CsvTable::column(std::string_view name) const {
    if (auto i = find(name)) return *i;
    fail("parse", source + ": missing column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    const auto& s = rows[row][col];
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) {
        fail("parse", source + ": row " + std::to_string(row + 1) + ", column '" + header[col] + "': not a number: '" +
                          s + "'");
    }
    return v;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ += (i ? "," : "") + quote(header[i]);
    out_ += '\n';
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
    require(cells.size() == width_, "CsvWriter: row width does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ += (i ? "," : "") + quote(cells[i]);
    out_ += '\n';
    return *this;
}

CsvWriter& CsvWriter::row(const std::vector<double>& cells) {
    require(cells.size() == width_, "CsvWriter: row width does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ += (i ? "," : "") + num(cells[i]);
    out_ += '\n';
    return *this;
}

// ---------------------------------------------------------------------------
// hawkes_sim / kernels

std::string events_csv(const EventStream& stream) {
    CsvWriter w({"time", "dim"});
    for (const auto& e : stream.events) w.row({num(e.time), std::to_string(e.dim)});
    return w.str();
}

std::string price_path_csv(const PricePath& path) {
    CsvWriter w({"t", "price"});
    w.row(std::vector<std::string>{"0", "0"});
    for (std::size_t i = 0; i < path.jump_times.size(); ++i) w.row({num(path.jump_times[i]), std::to_string(path.values[i])});
    return w.str();
}

std::string mc_curve_csv(const McCurve& c) {
    CsvWriter w({"t", "mean", "stderr", "n"});
    for (std::size_t i = 0; i < c.t.size(); ++i) {
        w.row({num(c.t[i]), num(c.mean[i]), num(c.stderr_[i]), std::to_string(c.n_paths)});
    }
    return w.str();
}

std::string sampled_function_csv(const SampledFunction& f) {
    CsvWriter w({"t", "value"});
    for (std::size_t k = 0; k < f.size(); ++k) w.row(std::vector<double>{f.time(k), f[k]});
    return w.str();
}

json sampled_function_header(const SampledFunction& f) {
    return json{{"dt", f.dt()}, {"horizon", f.horizon()}, {"tail_mass", f.tail_mass()}};
}

// ---------------------------------------------------------------------------
// him_model

std::string analytic_curve_csv(const AnalyticCurve& c) {
    CsvWriter w({"t", "eta"});
    for (std::size_t i = 0; i < c.t.size(); ++i) w.row(std::vector<double>{c.t[i], c.eta[i]});
    return w.str();
}

namespace {

double get_number(const json& j, std::string_view key, const std::string& where) {
    const auto it = j.find(std::string(key));
    if (it == j.end()) fail("invalid_argument", where + ": missing '" + std::string(key) + "'");
    if (!it->is_number()) fail("invalid_argument", where + ": '" + std::string(key) + "' must be a number");
    return it->get<double>();
}

double get_number(const json& j, std::string_view key, const std::string& where, double fallback) {
    return j.contains(std::string(key)) ? get_number(j, key, where) : fallback;
}

} // namespace

Kernel kernel_from_json(const json& j) {
    const std::string where = "kernel";
    if (!j.is_object()) fail("invalid_argument", "kernel must be an object");
    const auto family = j.value("family", std::string{});
    if (family == "power_law") {
        reject_unknown(j, {"family", "alpha", "norm", "b", "offset"}, where);
        const double b = get_number(j, "b", where);
        const double offset = get_number(j, "offset", where, 0.25);
        if (j.contains("norm") == j.contains("alpha")) fail("invalid_argument", "kernel: give exactly one of alpha, norm");
        if (j.contains("norm")) return PowerLawKernel::with_norm(get_number(j, "norm", where), b, offset);
        return PowerLawKernel{get_number(j, "alpha", where), b, offset};
    }
    if (family == "exponential") {
        reject_unknown(j, {"family", "alpha", "norm", "beta"}, where);
        const double beta = get_number(j, "beta", where);
        if (j.contains("norm") == j.contains("alpha")) fail("invalid_argument", "kernel: give exactly one of alpha, norm");
        if (j.contains("norm")) return ExponentialKernel::with_norm(get_number(j, "norm", where), beta);
        return ExponentialKernel{get_number(j, "alpha", where), beta};
    }
    fail("invalid_argument", "kernel: family must be 'power_law' or 'exponential'");
}

json to_json(const Kernel& kernel) {
    if (const auto* p = std::get_if<PowerLawKernel>(&kernel)) {
        return json{{"family", "power_law"}, {"alpha", p->alpha}, {"b", p->b}, {"offset", p->offset}};
    }
    const auto& e = std::get<ExponentialKernel>(kernel);
    return json{{"family", "exponential"}, {"alpha", e.alpha}, {"beta", e.beta}};
}

HimSpec him_spec_from_json(const json& j) {
    if (!j.is_object()) fail("invalid_argument", "spec must be an object");
    reject_unknown(j, {"mu", "kernel", "C", "f", "schedule"}, "spec");
    HimSpec s;
    s.mu = get_number(j, "mu", "spec", s.mu);
    if (!j.contains("kernel")) fail("invalid_argument", "spec: missing 'kernel'");
    s.phi = kernel_from_json(j.at("kernel"));
    s.C = get_number(j, "C", "spec", s.C);
    if (j.contains("f")) {
        const auto& f = j.at("f");
        reject_unknown(f, {"form", "a", "p"}, "spec.f");
        if (f.value("form", std::string("power")) != "power") fail("invalid_argument", "spec.f: only form 'power' (a r^p) is supported");
        s.f.a = get_number(f, "a", "spec.f", s.f.a);
        s.f.p = get_number(f, "p", "spec.f", s.f.p);
    }
    if (j.contains("schedule")) {
        const auto& sc = j.at("schedule");
        reject_unknown(sc, {"t0", "T", "r", "segments"}, "spec.schedule");
        if (sc.contains("segments")) {
            if (sc.contains("t0") || sc.contains("T") || sc.contains("r")) {
                fail("invalid_argument", "spec.schedule: give either segments or t0/T/r");
            }
            s.schedule.segments.clear();
            for (const auto& seg : sc.at("segments")) {
                reject_unknown(seg, {"start", "end", "rate"}, "spec.schedule.segments");
                s.schedule.segments.push_back({get_number(seg, "start", "segment"), get_number(seg, "end", "segment"),
                                               get_number(seg, "rate", "segment")});
            }
        } else {
            s.schedule = TradingSchedule::constant(get_number(sc, "t0", "spec.schedule", 0.0),
                                                   get_number(sc, "T", "spec.schedule"),
                                                   get_number(sc, "r", "spec.schedule", 1.0));
        }
    }
    s.validate();
    return s;
}

json to_json(const HimSpec& s) {
    json j{{"mu", s.mu}, {"kernel", to_json(s.phi)}, {"C", s.C}, {"f", {{"form", "power"}, {"a", s.f.a}, {"p", s.f.p}}}};
    if (s.schedule.is_constant()) {
        const auto& seg = s.schedule.segments.front();
        j["schedule"] = {{"t0", seg.start}, {"T", seg.end - seg.start}, {"r", seg.rate}};
    } else {
        json segs = json::array();
        for (const auto& seg : s.schedule.segments) segs.push_back({{"start", seg.start}, {"end", seg.end}, {"rate", seg.rate}});
        j["schedule"] = {{"segments", segs}};
    }
    return j;
}

// ---------------------------------------------------------------------------
// impact_estimation

std::string impact_curve_csv(const ImpactCurve& c) {
    std::vector<std::string> header{"s", "mean", "count"};
    for (double level : c.band_levels) header.push_back("q" + num(100.0 * level));
    CsvWriter w(header);
    for (std::size_t k = 0; k < c.s.size(); ++k) {
        std::vector<std::string> row{num(c.s[k]), num(c.mean[k]), std::to_string(c.count.empty() ? 0 : c.count[k])};
        for (const auto& band : c.bands) row.push_back(num(band[k]));
        w.row(row);
    }
    return w.str();
}

ImpactCurve read_curve(const fs::path& path, double t0, double duration) {
    const auto t = read_csv(path);
    std::optional<std::size_t> value;
    for (const char* name : {"mean", "eta", "value"}) {
        if ((value = t.find(name))) break;
    }
    if (!value) fail("parse", t.source + ": missing column 'mean' (or 'eta', 'value')");
    std::vector<double> s, v;
    if (const auto sc = t.find("s")) {
        for (std::size_t r = 0; r < t.size(); ++r) {
            s.push_back(t.number(r, *sc));
            v.push_back(t.number(r, *value));
        }
    } else {
        const auto tc = t.find("t");
        if (!tc) fail("parse", t.source + ": missing column 's' (or 't')");
        require(duration > 0.0, "read_curve: duration must be > 0");
        for (std::size_t r = 0; r < t.size(); ++r) {
            s.push_back((t.number(r, *tc) - t0) / duration);
            v.push_back(t.number(r, *value));
        }
    }
    if (s.size() < 2) fail("insufficient_data", t.source + ": curve needs at least 2 rows");
    return make_curve(std::move(s), std::move(v));
}

namespace {

int parse_side(const CsvTable& t, std::size_t row, std::size_t col) {
    const auto& sd = t.text(row, col);
    if (sd == "B" || sd == "1" || sd == "+1") return 1;
    if (sd == "S" || sd == "-1") return -1;
    fail("parse", t.source + ": row " + std::to_string(row + 1) + ", column '" + t.header[col] +
                      "': expected B, S, 1 or -1");
}

} // namespace

std::vector<MetaorderRecord> parse_metaorders(const CsvTable& t) {
    const auto id = t.column("id"), ins = t.column("instrument"), date = t.column("date"),
               t0 = t.column("t0_seconds"), dur = t.column("duration_seconds"), side = t.column("side"),
               v = t.column("v"), V = t.column("V"), vbar = t.column("vbar"), sigma = t.column("sigma"),
               psi = t.column("psi");
    const auto child = t.find("child_orders");
    std::vector<MetaorderRecord> out;
    for (std::size_t r = 0; r < t.size(); ++r) {
        MetaorderRecord m;
        m.id = t.text(r, id);
        m.instrument = t.text(r, ins);
        m.date = t.text(r, date);
        m.t0 = t.number(r, t0);
        m.T = t.number(r, dur);
        m.side = parse_side(t, r, side);
        m.v = t.number(r, v);
        m.V = t.number(r, V);
        m.vbar = t.number(r, vbar);
        m.sigma = t.number(r, sigma);
        m.psi = t.number(r, psi);
        if (child) m.child_orders = static_cast<std::size_t>(t.number(r, *child));
        validate(m);
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<MetaorderRecord> read_metaorders(const fs::path& path) { return parse_metaorders(read_csv(path)); }

std::string metaorders_csv(std::span<const MetaorderRecord> records) {
    CsvWriter w({"id", "instrument", "date", "t0_seconds", "duration_seconds", "side", "v", "V", "vbar", "sigma", "psi",
                 "child_orders"});
    for (const auto& m : records) {
        w.row({m.id, m.instrument, m.date, num(m.t0), num(m.T), m.side > 0 ? "B" : "S", num(m.v), num(m.V), num(m.vbar),
               num(m.sigma), num(m.psi), std::to_string(m.child_orders)});
    }
    return w.str();
}

PriceSeries read_price_series(const fs::path& path) {
    const auto t = read_csv(path);
    const auto tc = t.column("time_seconds"), pc = t.column("mid_price");
    PriceSeries s;
    for (std::size_t r = 0; r < t.size(); ++r) {
        s.time.push_back(t.number(r, tc));
        s.price.push_back(t.number(r, pc));
    }
    s.validate();
    return s;
}

std::string price_series_csv(const PriceSeries& s) {
    CsvWriter w({"time_seconds", "mid_price"});
    for (std::size_t i = 0; i < s.time.size(); ++i) w.row(std::vector<double>{s.time[i], s.price[i]});
    return w.str();
}

// ---------------------------------------------------------------------------
// model_fit

json to_json(const FitResult& r) {
    return json{{"alpha", r.alpha},
                {"norm", r.norm},
                {"b", r.b},
                {"C", r.C},
                {"scale", r.scale},
                {"objective", r.objective},
                {"relative_objective", r.relative_objective},
                {"converged", r.converged},
                {"evaluations", r.evaluations},
                {"cycles", r.cycles},
                {"diagnostics", r.diagnostics}};
}

// ---------------------------------------------------------------------------
// daily_analysis

std::map<std::string, DatedSeries> read_closes(const fs::path& path, std::string_view key) {
    const auto t = read_csv(path);
    const auto kc = t.column(key), dc = t.column("date"), cc = t.column("close");
    std::map<std::string, std::vector<std::pair<std::string, double>>> raw;
    for (std::size_t r = 0; r < t.size(); ++r) raw[t.text(r, kc)].emplace_back(t.text(r, dc), t.number(r, cc));
    std::map<std::string, DatedSeries> out;
    for (auto& [name, rows] : raw) {
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        auto& s = out[name];
        for (const auto& [d, c] : rows) {
            if (!s.date.empty() && s.date.back() == d) fail("parse", t.source + ": duplicate date " + d + " for " + name);
            s.date.push_back(d);
            s.value.push_back(c);
        }
    }
    return out;
}

std::vector<DailyMetaorder> read_daily_metaorders(const fs::path& path) {
    const auto t = read_csv(path);
    const auto id = t.column("id"), ins = t.column("instrument"), date = t.column("date"), side = t.column("side"),
               R = t.column("R");
    std::vector<DailyMetaorder> out;
    for (std::size_t r = 0; r < t.size(); ++r) {
        DailyMetaorder m;
        m.id = t.text(r, id);
        m.instrument = t.text(r, ins);
        m.date = t.text(r, date);
        m.side = parse_side(t, r, side);
        m.R = t.number(r, R);
        out.push_back(std::move(m));
    }
    return out;
}

std::map<std::string, std::string> read_index_map(const fs::path& path) {
    const auto t = read_csv(path);
    const auto ic = t.column("instrument"), xc = t.column("index");
    std::map<std::string, std::string> out;
    for (std::size_t r = 0; r < t.size(); ++r) out[t.text(r, ic)] = t.text(r, xc);
    return out;
}

std::string profile_csv(const PostExecProfile& p) {
    std::vector<std::string> header{"day_offset", "systematic_bp", "idiosyncratic_bp", "total_bp", "idiosyncratic_stderr_bp",
                                    "total_stderr_bp"};
    const bool bands = !p.idiosyncratic_band.lo.empty();
    if (bands) {
        for (const char* h : {"idiosyncratic_lo_bp", "idiosyncratic_hi_bp", "total_lo_bp", "total_hi_bp"}) header.push_back(h);
    }
    CsvWriter w(header);
    for (std::size_t d = 0; d < p.day.size(); ++d) {
        std::vector<std::string> row{std::to_string(p.day[d]), num(p.systematic[d]), num(p.idiosyncratic[d]), num(p.total[d]),
                                     num(p.idiosyncratic_stderr[d]), num(p.total_stderr[d])};
        if (bands) {
            row.push_back(num(p.idiosyncratic_band.lo[d]));
            row.push_back(num(p.idiosyncratic_band.hi[d]));
            row.push_back(num(p.total_band.lo[d]));
            row.push_back(num(p.total_band.hi[d]));
        }
        w.row(row);
    }
    return w.str();
}

std::string autocorr_csv(const AutocorrResult& r) {
    CsvWriter w({"lag", "autocorr", "q25", "q50", "q75", "pairs"});
    for (std::size_t i = 0; i < r.lag.size(); ++i) {
        w.row({std::to_string(r.lag[i]), num(r.value[i]), num(r.q25[i]), num(r.q50[i]), num(r.q75[i]),
               std::to_string(r.pairs[i])});
    }
    return w.str();
}

// ---------------------------------------------------------------------------
// JSON helpers

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) fail("invalid_argument", where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) fail("invalid_argument", where + ": unknown key '" + key + "'");
    }
}

json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail("parse", source + ": " + e.what());
    }
}

} // namespace himpact::io
