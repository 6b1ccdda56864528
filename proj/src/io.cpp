#include "linktt/io/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace linktt::io {

using nlohmann::json;

namespace {

// deterministic shortest-round-trip float formatting
std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        for (int prec = 1; prec <= 16; ++prec) {
            char shorter[32];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v) return shorter;
        }
    }
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_positive(const std::string& s, const char* what, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": bad " + std::string(what) +
                        " value '" + s + "'");
    }
}

}  // namespace

core::RoadNetwork load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open network file " + path.string());

    std::string line;
    std::size_t line_no = 0;
    std::vector<core::Link> links;

    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') continue;  // format_version comment
        if (!header_seen) {
            if (line != "id,from,to,length_m,speed_limit_mps")
                throw DataError("line " + std::to_string(line_no) +
                                ": expected header id,from,to,length_m,speed_limit_mps");
            header_seen = true;
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw DataError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                            std::to_string(fields.size()));
        core::Link l;
        l.id = fields[0];
        l.from_node = fields[1];
        l.to_node = fields[2];
        l.length_m = parse_positive(fields[3], "length_m", line_no);
        l.speed_limit_mps = parse_positive(fields[4], "speed_limit_mps", line_no);
        try {
            l.check();
        } catch (const std::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        links.push_back(std::move(l));
    }
    if (!header_seen) throw DataError("network file " + path.string() + " has no header");
    try {
        return core::RoadNetwork(std::move(links));
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
}

void write_network(const core::RoadNetwork& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write network file " + path.string());
    out << "# format_version=" << kFormatVersion << "\n";
    out << "id,from,to,length_m,speed_limit_mps\n";
    for (const auto& l : net.links())
        out << l.id << ',' << l.from_node << ',' << l.to_node << ',' << fmt_double(l.length_m)
            << ',' << fmt_double(l.speed_limit_mps) << "\n";
}

namespace {

json trajectory_to_json(const core::TrajectoryMeasurement& t) {
    return json{{"id", t.id},
                {"start_time", t.start_time},
                {"duration_s", t.duration_s},
                {"path", t.path},
                {"offset_start_m", t.offset_start_m},
                {"offset_end_m", t.offset_end_m}};
}

std::optional<core::TrajectoryMeasurement> trajectory_from_json(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    try {
        core::TrajectoryMeasurement t;
        t.id = j.at("id").get<std::string>();
        t.start_time = j.at("start_time").get<double>();
        t.duration_s = j.at("duration_s").get<double>();
        t.path = j.at("path").get<std::vector<std::string>>();
        t.offset_start_m = j.at("offset_start_m").get<double>();
        t.offset_end_m = j.at("offset_end_m").get<double>();
        return t;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

}  // namespace

TrajectoryReadResult read_trajectories(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trajectory file " + path.string());
    TrajectoryReadResult res;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            json j = json::parse(line, nullptr, false);
            if (!j.is_discarded() && j.is_object() && j.contains("format_version"))
                continue;  // header line
        }
        auto t = trajectory_from_json(line);
        if (t)
            res.records.push_back(std::move(*t));
        else
            ++res.skipped_lines;
    }
    return res;
}

void write_trajectories(const std::vector<core::TrajectoryMeasurement>& trajectories,
                        const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trajectory file " + path.string());
    out << json{{"format_version", kFormatVersion}, {"type", "trajectories"}}.dump() << "\n";
    for (const auto& t : trajectories) out << trajectory_to_json(t).dump() << "\n";
}

namespace {

constexpr std::size_t kMaxBatchRecords = 1000000;  // memory guard per interval

class VectorReplaySource final : public stream::Source<core::TrajectoryMeasurement> {
public:
    VectorReplaySource(std::vector<core::TrajectoryMeasurement> records, double interval_s)
        : records_(std::move(records)), interval_s_(interval_s) {
        if (!(interval_s_ > 0.0)) throw DataError("replay: interval must be > 0");
        for (std::size_t i = 1; i < records_.size(); ++i)
            if (records_[i].start_time < records_[i - 1].start_time)
                throw DataError("replay: records not sorted by start_time at index " +
                                std::to_string(i));
        if (!records_.empty())
            t0_ = std::floor(records_.front().start_time / interval_s_) * interval_s_;
    }

    double start_time() const override { return t0_; }

    // single-pass: records are moved out as they are emitted
    std::optional<std::vector<core::TrajectoryMeasurement>> pull(std::int64_t k) override {
        if (cursor_ >= records_.size()) return std::nullopt;
        const double hi = t0_ + static_cast<double>(k + 1) * interval_s_;
        std::vector<core::TrajectoryMeasurement> out;
        while (cursor_ < records_.size() && records_[cursor_].start_time < hi) {
            if (out.size() >= kMaxBatchRecords)
                throw DataError("replay: interval " + std::to_string(k) + " exceeds the " +
                                std::to_string(kMaxBatchRecords) + " record cap");
            out.push_back(std::move(records_[cursor_++]));
        }
        return out;
    }

private:
    std::vector<core::TrajectoryMeasurement> records_;
    double interval_s_;
    double t0_ = 0.0;
    std::size_t cursor_ = 0;
};

}  // namespace

std::unique_ptr<stream::Source<core::TrajectoryMeasurement>> make_replay_source(
    const ReplaySource& src) {
    if (!(src.rate_multiplier > 0.0)) throw DataError("replay: rate_multiplier must be > 0");
    auto res = read_trajectories(src.path);
    return std::make_unique<VectorReplaySource>(std::move(res.records), src.interval_s);
}

std::unique_ptr<stream::Source<core::TrajectoryMeasurement>> make_replay_source(
    std::vector<core::TrajectoryMeasurement> records, double interval_s) {
    return std::make_unique<VectorReplaySource>(std::move(records), interval_s);
}

struct EstimateWriter::Impl {
    std::ofstream out;
    const core::RoadNetwork* net = nullptr;
};

EstimateWriter::EstimateWriter(const std::filesystem::path& path, const core::RoadNetwork& net)
    : impl_(std::make_unique<Impl>()) {
    impl_->out.open(path);
    if (!impl_->out) throw DataError("cannot write estimates file " + path.string());
    impl_->net = &net;
    impl_->out << json{{"format_version", kFormatVersion}, {"type", "estimates"}}.dump() << "\n";
}

EstimateWriter::~EstimateWriter() = default;

void EstimateWriter::append(const em::ModelState& state) {
    std::vector<core::LinkIndex> links;
    links.reserve(state.params.size());
    for (const auto& [link, _] : state.params) links.push_back(link);
    std::sort(links.begin(), links.end());
    for (core::LinkIndex link : links) {
        const auto& ls = state.params.at(link);
        impl_->out << "{\"time\":" << fmt_double(state.time_index)
                   << ",\"link_id\":" << json(impl_->net->link(link).id).dump()
                   << ",\"k\":" << fmt_double(ls.params.k)
                   << ",\"theta\":" << fmt_double(ls.params.theta)
                   << ",\"mean_s\":" << fmt_double(ls.params.mean())
                   << ",\"stddev_s\":" << fmt_double(ls.params.stddev())
                   << ",\"n_effective\":" << fmt_double(ls.n_effective) << "}\n";
    }
    if (!impl_->out) throw DataError("estimate write failed (disk?)");
}

void EstimateWriter::close() {
    if (impl_->out.is_open()) impl_->out.close();
}

std::vector<EstimateRecord> read_estimates(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open estimates file " + path.string());
    std::vector<EstimateRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || j.contains("format_version")) continue;
        EstimateRecord r;
        r.time = j.at("time").get<double>();
        r.link_id = j.at("link_id").get<std::string>();
        r.k = j.at("k").get<double>();
        r.theta = j.at("theta").get<double>();
        r.mean_s = j.at("mean_s").get<double>();
        r.stddev_s = j.at("stddev_s").get<double>();
        r.n_effective = j.at("n_effective").get<double>();
        out.push_back(std::move(r));
    }
    return out;
}

void write_metrics(const std::vector<stream::BatchMetrics>& metrics,
                   const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write metrics file " + path.string());
    out << json{{"format_version", kFormatVersion}, {"type", "batch_metrics"}}.dump() << "\n";
    for (const auto& m : metrics) {
        out << json{{"interval_index", m.interval_index},
                    {"interval_start", m.interval_start},
                    {"records_in", m.records_in},
                    {"records_out", m.records_out},
                    {"processing_time_s", m.processing_time_s},
                    {"deadline_missed", m.deadline_missed},
                    {"failures", m.failures}}
                   .dump()
            << "\n";
    }
}

std::string observation_to_json(const core::Observation& obs) {
    json weights = json::array();
    for (const auto& [link, a] : obs.weights)
        weights.push_back(json::array({link, a}));
    return json{{"id", obs.id},
                {"time", obs.time},
                {"duration_s", obs.duration_s},
                {"weights", weights}}
        .dump();
}

std::optional<core::Observation> observation_from_json(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    try {
        core::Observation obs;
        obs.id = j.at("id").get<std::string>();
        obs.time = j.at("time").get<double>();
        obs.duration_s = j.at("duration_s").get<double>();
        for (const auto& w : j.at("weights"))
            obs.weights.emplace_back(w.at(0).get<core::LinkIndex>(), w.at(1).get<double>());
        return obs;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

HistoricalStore::HistoricalStore(double slot_s, double tz_offset_s)
    : slot_s_(slot_s), tz_offset_s_(tz_offset_s) {
    if (!(slot_s_ > 0.0)) throw DataError("HistoricalStore: slot duration must be > 0");
}

std::int64_t HistoricalStore::day_of(double time) const {
    return static_cast<std::int64_t>(std::floor((time + tz_offset_s_) / 86400.0));
}

int HistoricalStore::weekday_of(double time) const {
    // day 0 of the unix epoch was a Thursday; weekday 0 = Monday
    const std::int64_t day = day_of(time);
    return static_cast<int>((((day + 3) % 7) + 7) % 7);
}

std::int64_t HistoricalStore::slot_of(double time) const {
    const double tod = time + tz_offset_s_ - static_cast<double>(day_of(time)) * 86400.0;
    return static_cast<std::int64_t>(std::floor(tod / slot_s_));
}

void HistoricalStore::put(const core::Observation& obs) {
    days_[day_of(obs.time)][slot_of(obs.time)].push_back(obs);
}

std::vector<core::Observation> HistoricalStore::query(int weekday, std::int64_t slot) const {
    std::vector<core::Observation> out;
    for (const auto& [day, slots] : days_) {
        if (static_cast<int>((((day + 3) % 7) + 7) % 7) != weekday) continue;
        auto it = slots.find(slot);
        if (it == slots.end()) continue;
        out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
}

std::vector<core::Observation> HistoricalStore::in_range(double t_lo, double t_hi) const {
    std::vector<core::Observation> out;
    if (!(t_lo < t_hi)) return out;
    const std::int64_t day_lo = day_of(t_lo);
    const std::int64_t day_hi = day_of(t_hi);
    for (auto it = days_.lower_bound(day_lo); it != days_.end() && it->first <= day_hi; ++it)
        for (const auto& [slot, observations] : it->second)
            for (const auto& obs : observations)
                if (obs.time >= t_lo && obs.time < t_hi) out.push_back(obs);
    return out;
}

std::size_t HistoricalStore::size() const {
    std::size_t n = 0;
    for (const auto& [day, slots] : days_)
        for (const auto& [slot, observations] : slots) n += observations.size();
    return n;
}

void HistoricalStore::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream meta(dir / "store.json");
    meta << json{{"format_version", kFormatVersion},
                 {"slot_s", slot_s_},
                 {"tz_offset_s", tz_offset_s_}}
                .dump()
         << "\n";
    for (const auto& [day, slots] : days_) {
        std::ofstream out(dir / ("day_" + std::to_string(day) + ".jsonl"));
        for (const auto& [slot, observations] : slots)
            for (const auto& obs : observations) out << observation_to_json(obs) << "\n";
    }
}

HistoricalStore HistoricalStore::load(const std::filesystem::path& dir, double slot_s,
                                      double tz_offset_s) {
    HistoricalStore store(slot_s, tz_offset_s);
    if (!std::filesystem::exists(dir)) return store;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (auto obs = observation_from_json(line)) store.put(*obs);
        }
    }
    return store;
}

} // namespace linktt::io
