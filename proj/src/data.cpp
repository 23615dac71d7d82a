#include "corl/data.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace corl {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* init_mode_name(InitMode mode) {
    return mode == InitMode::Random ? "random" : "fixed";
}

InitMode init_mode_from_name(const std::string& name) {
    if (name == "random") return InitMode::Random;
    if (name == "fixed") return InitMode::Fixed;
    throw DataError(DataError::Kind::CorruptRecord, "unknown init_mode: " + name);
}

std::vector<double> mc_return_to_go(const Episode& episode, double gamma) {
    if (gamma < 0.0 || gamma > 1.0)
        throw DataError(DataError::Kind::BadArgument, "gamma must be in [0,1]");
    const int T = episode.length();
    std::vector<double> out(T, 0.0);
    double acc = 0.0;
    for (int t = T - 1; t >= 0; --t) {
        acc = episode.steps[t].reward + gamma * acc;
        out[t] = acc;
    }
    return out;
}

std::vector<ChunkSample> make_chunks(const Episode& episode, int h, double gamma) {
    if (episode.steps.empty())
        throw DataError(DataError::Kind::EmptyEpisode, "cannot chunk an empty episode");
    if (h < 1) throw DataError(DataError::Kind::BadArgument, "h must be >= 1");

    const int T = episode.length();
    const int A = static_cast<int>(episode.steps[0].action.size());
    const std::vector<double> mc = mc_return_to_go(episode, gamma);

    std::vector<ChunkSample> chunks;
    chunks.reserve(T);
    for (int t = 0; t < T; ++t) {
        ChunkSample c;
        c.valid_len = std::min(h, T - t);
        c.mc_return = mc[t];
        c.states.reserve(h + 1);
        for (int i = 0; i <= h; ++i) {
            int idx = std::min(t + i, T - 1);  // repeat terminal state as padding
            c.states.push_back(episode.steps[idx].state);
        }
        c.actions.reserve(h);
        c.rewards.reserve(h);
        c.done_mask.reserve(h);
        for (int i = 0; i < h; ++i) {
            if (i < c.valid_len) {
                c.actions.push_back(episode.steps[t + i].action);
                c.rewards.push_back(episode.steps[t + i].reward);
            } else {
                c.actions.push_back(Vec::Zero(A));
                c.rewards.push_back(0.0);
            }
            c.done_mask.push_back(t + i >= T - 1);
        }
        chunks.push_back(std::move(c));
    }
    return chunks;
}

void OfflineDataset::rebuild_chunks() {
    chunks.clear();
    for (const Episode& ep : episodes) {
        auto cs = make_chunks(ep, h, gamma);
        chunks.insert(chunks.end(), std::make_move_iterator(cs.begin()), std::make_move_iterator(cs.end()));
    }
}

namespace {

void write_vec(std::ostream& os, const Vec& v) {
    os << '[';
    for (int i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << format_double(v[i]);
    }
    os << ']';
}

Vec parse_vec(const json& j, int expected_dim, const char* what, long record) {
    if (!j.is_array())
        throw DataError(DataError::Kind::CorruptRecord, std::string(what) + " is not an array", record);
    if (expected_dim >= 0 && static_cast<int>(j.size()) != expected_dim) {
        std::ostringstream msg;
        msg << "dimension mismatch in " << what << " at record " << record << ": expected " << expected_dim
            << ", got " << j.size();
        throw DataError(DataError::Kind::DimensionMismatch, msg.str(), record);
    }
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
    return v;
}

}  // namespace

void save_dataset(const OfflineDataset& dataset, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError(DataError::Kind::Io, "cannot open for writing: " + path);

    os << "{\"format_version\":" << kFormatVersion << ",\"env_id\":\"" << dataset.env_id << "\",\"S\":" << dataset.S
       << ",\"A\":" << dataset.A << ",\"h\":" << dataset.h << ",\"gamma\":" << format_double(dataset.gamma)
       << ",\"episode_count\":" << dataset.episodes.size();
    if (!dataset.warning.empty()) os << ",\"warning\":" << json(dataset.warning).dump();
    os << "}\n";

    for (const Episode& ep : dataset.episodes) {
        os << "{\"init_mode\":\"" << init_mode_name(ep.init_mode) << "\",\"success\":" << (ep.success ? "true" : "false")
           << ",\"steps\":[";
        for (std::size_t s = 0; s < ep.steps.size(); ++s) {
            const Step& st = ep.steps[s];
            if (s) os << ',';
            os << "{\"state\":";
            write_vec(os, st.state);
            os << ",\"action\":";
            write_vec(os, st.action);
            os << ",\"reward\":" << format_double(st.reward) << ",\"done\":" << (st.done ? "true" : "false") << '}';
        }
        os << "]}\n";
    }
    if (!os) throw DataError(DataError::Kind::Io, "write failure: " + path);
}

OfflineDataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError(DataError::Kind::Io, "cannot open for reading: " + path);

    std::string line;
    if (!std::getline(is, line))
        throw DataError(DataError::Kind::CorruptRecord, "empty dataset file: " + path, 0);

    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(DataError::Kind::CorruptRecord, std::string("bad header: ") + e.what(), 0);
    }
    if (!header.contains("format_version") || header["format_version"].get<int>() != kFormatVersion) {
        throw DataError(DataError::Kind::VersionMismatch,
                        "unsupported dataset format version in " + path, 0);
    }

    OfflineDataset d;
    try {
        d.env_id = header.at("env_id").get<std::string>();
        d.S = header.at("S").get<int>();
        d.A = header.at("A").get<int>();
        d.h = header.at("h").get<int>();
        d.gamma = header.at("gamma").get<double>();
        if (header.contains("warning")) d.warning = header["warning"].get<std::string>();
    } catch (const json::exception& e) {
        throw DataError(DataError::Kind::CorruptRecord, std::string("bad header field: ") + e.what(), 0);
    }
    const long expected = header.at("episode_count").get<long>();

    long record = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        ++record;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            std::ostringstream msg;
            msg << "corrupt episode record " << record << ": " << e.what();
            throw DataError(DataError::Kind::CorruptRecord, msg.str(), record);
        }
        Episode ep;
        ep.env_id = d.env_id;
        try {
            ep.init_mode = init_mode_from_name(j.at("init_mode").get<std::string>());
            ep.success = j.at("success").get<bool>();
            for (const json& js : j.at("steps")) {
                Step st;
                st.state = parse_vec(js.at("state"), d.S, "state", record);
                st.action = parse_vec(js.at("action"), d.A, "action", record);
                st.reward = js.at("reward").get<double>();
                st.done = js.at("done").get<bool>();
                ep.steps.push_back(std::move(st));
            }
        } catch (const json::exception& e) {
            std::ostringstream msg;
            msg << "corrupt episode record " << record << ": " << e.what();
            throw DataError(DataError::Kind::CorruptRecord, msg.str(), record);
        }
        if (ep.steps.empty())
            throw DataError(DataError::Kind::EmptyEpisode, "episode record has no steps", record);
        d.episodes.push_back(std::move(ep));
    }
    if (record != expected) {
        std::ostringstream msg;
        msg << "episode_count says " << expected << " but file has " << record;
        throw DataError(DataError::Kind::CorruptRecord, msg.str(), record);
    }
    d.rebuild_chunks();
    return d;
}

std::vector<int> sample_batch_indices(const OfflineDataset& dataset, int batch_size, RngStream& rng) {
    if (dataset.chunks.empty())
        throw DataError(DataError::Kind::BadArgument, "dataset has no chunks");
    if (batch_size <= 0)
        throw DataError(DataError::Kind::BadArgument, "batch_size must be positive");
    std::vector<int> idx(batch_size);
    for (int i = 0; i < batch_size; ++i)
        idx[i] = static_cast<int>(rng.uniform_int(dataset.chunks.size()));
    return idx;
}

std::vector<const ChunkSample*> sample_batch(const OfflineDataset& dataset, int batch_size, RngStream& rng) {
    std::vector<const ChunkSample*> out;
    out.reserve(batch_size);
    for (int i : sample_batch_indices(dataset, batch_size, rng)) out.push_back(&dataset.chunks[i]);
    return out;
}

}  // namespace corl
