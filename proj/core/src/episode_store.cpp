#include "mera/episode_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mera/error.hpp"

namespace mera {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void storage_error(std::string const& what) {
    throw Error{ErrorCode::StorageFailure, what + ": " + std::strerror(errno)};
}

void write_all(int fd, std::string const& data, fs::path const& path) {
    std::size_t off = 0;
    while (off < data.size()) {
        auto const n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            storage_error("write " + path.string());
        }
        off += static_cast<std::size_t>(n);
    }
}

auto serialize(EpisodeRecord const& r) -> std::string {
    return json(r).dump() + "\n";
}

}  // namespace

void to_json(json& j, EpisodeRecord const& r) {
    j = json{{"record_id", r.record_id},
             {"timestamp_ms", r.timestamp_ms},
             {"fingerprint", r.fingerprint},
             {"task_id", r.task_id},
             {"task_text", r.task_text},
             {"candidate_source", r.candidate_source},
             {"report", r.report},
             {"reward", r.reward},
             {"accepted", r.accepted},
             {"duration", r.duration},
             {"decoding_action", r.decoding_action},
             {"retrieval_action", r.retrieval_action},
             {"model_id", r.model_id}};
}

void from_json(json const& j, EpisodeRecord& r) {
    r.record_id = j.at("record_id").get<std::int64_t>();
    r.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    r.fingerprint = j.at("fingerprint").get<Fingerprint>();
    r.task_id = j.value("task_id", std::string{});
    r.task_text = j.at("task_text").get<std::string>();
    r.candidate_source = j.at("candidate_source").get<std::string>();
    r.report = j.at("report").get<ValidationReport>();
    r.reward = j.at("reward").get<double>();
    r.accepted = j.at("accepted").get<bool>();
    r.duration = j.value("duration", 0.0);
    r.decoding_action = j.value("decoding_action", std::string{});
    r.retrieval_action = j.value("retrieval_action", std::string{});
    r.model_id = j.value("model_id", std::string{});
}

auto rank_episodes(std::vector<EpisodeRecord> const& records, Fingerprint const& query,
                   RetrievalMode mode, std::size_t k, SimilarityWeights const& weights)
    -> std::vector<RankedEpisode> {
    auto w = weights;
    if (mode == RetrievalMode::AstMatch) {
        w.fail = 0.0;
    }
    w.validate();
    std::vector<RankedEpisode> ranked;
    for (auto const& r : records) {
        if (mode == RetrievalMode::FailureMatch &&
            r.fingerprint.failure_signature.failure != query.failure_signature.failure) {
            continue;
        }
        ranked.push_back({&r, similarity(query, r.fingerprint, w)});
    }
    std::sort(ranked.begin(), ranked.end(), [](RankedEpisode const& a, RankedEpisode const& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        if (a.record->timestamp_ms != b.record->timestamp_ms) {
            return a.record->timestamp_ms > b.record->timestamp_ms;
        }
        return a.record->record_id > b.record->record_id;
    });
    if (ranked.size() > k) {
        ranked.resize(k);
    }
    return ranked;
}

EpisodeStore::EpisodeStore(fs::path path, std::size_t retention_cap)
    : path_{std::move(path)}, cap_{retention_cap} {
    if (cap_ == 0) {
        throw Error{ErrorCode::InvalidConfig, "retention cap must be >= 1"};
    }
    std::error_code ec;
    if (path_.has_parent_path()) {
        fs::create_directories(path_.parent_path(), ec);
    }
    auto const lock_path = path_.string() + ".lock";
    lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (lock_fd_ < 0) {
        storage_error("open " + lock_path);
    }
    if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
        auto const saved = errno;
        ::close(lock_fd_);
        lock_fd_ = -1;
        errno = saved;
        storage_error("store " + path_.string() + " is locked by another writer");
    }
    records_ = load_records(path_);
    for (auto const& r : records_) {
        next_id_ = std::max(next_id_, r.record_id + 1);
    }
    if (records_.size() > cap_) {
        compact();
    }
}

EpisodeStore::~EpisodeStore() {
    if (lock_fd_ >= 0) {
        ::flock(lock_fd_, LOCK_UN);
        ::close(lock_fd_);
    }
}

EpisodeStore::EpisodeStore(EpisodeStore&& other) noexcept
    : path_{std::move(other.path_)},
      cap_{other.cap_},
      records_{std::move(other.records_)},
      next_id_{other.next_id_},
      lock_fd_{std::exchange(other.lock_fd_, -1)} {}

auto EpisodeStore::operator=(EpisodeStore&& other) noexcept -> EpisodeStore& {
    if (this != &other) {
        if (lock_fd_ >= 0) {
            ::flock(lock_fd_, LOCK_UN);
            ::close(lock_fd_);
        }
        path_ = std::move(other.path_);
        cap_ = other.cap_;
        records_ = std::move(other.records_);
        next_id_ = other.next_id_;
        lock_fd_ = std::exchange(other.lock_fd_, -1);
    }
    return *this;
}

auto EpisodeStore::persist(EpisodeRecord record) -> std::int64_t {
    record.record_id = next_id_;
    auto const line = serialize(record);
    int const fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) {
        storage_error("open " + path_.string());
    }
    try {
        write_all(fd, line, path_);
    } catch (...) {
        ::close(fd);
        throw;
    }
    if (::fsync(fd) != 0) {
        ::close(fd);
        storage_error("fsync " + path_.string());
    }
    ::close(fd);
    ++next_id_;
    records_.push_back(std::move(record));
    if (records_.size() > cap_) {
        compact();
    }
    return records_.back().record_id;
}

void EpisodeStore::compact() {
    // Records are kept in append order, which is also id order.
    auto const excess = records_.size() - std::min(records_.size(), cap_);
    records_.erase(records_.begin(), records_.begin() + static_cast<std::ptrdiff_t>(excess));
    auto const tmp = path_.string() + ".tmp";
    int const fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) {
        storage_error("open " + tmp);
    }
    std::string body;
    for (auto const& r : records_) {
        body += serialize(r);
    }
    try {
        write_all(fd, body, tmp);
    } catch (...) {
        ::close(fd);
        throw;
    }
    if (::fsync(fd) != 0) {
        ::close(fd);
        storage_error("fsync " + tmp);
    }
    ::close(fd);
    if (::rename(tmp.c_str(), path_.c_str()) != 0) {
        storage_error("rename " + tmp);
    }
}

auto EpisodeStore::retrieve(Fingerprint const& query, RetrievalMode mode, std::size_t k,
                            SimilarityWeights const& weights) const
    -> std::vector<EpisodeRecord> {
    if (records_.empty()) {
        throw Error{ErrorCode::EmptyStore, "episode store " + path_.string() + " is empty"};
    }
    if (k == 0) {
        throw Error{ErrorCode::InvalidConfig, "k must be >= 1"};
    }
    std::vector<EpisodeRecord> out;
    for (auto const& r : rank_episodes(records_, query, mode, k, weights)) {
        out.push_back(*r.record);
    }
    return out;
}

auto EpisodeStore::load_records(fs::path const& path) -> std::vector<EpisodeRecord> {
    std::vector<EpisodeRecord> out;
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        return out;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    auto const text = ss.str();
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto const nl = text.find('\n', pos);
        bool const complete = nl != std::string::npos;
        auto const line = text.substr(pos, complete ? nl - pos : std::string::npos);
        pos = complete ? nl + 1 : text.size();
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(json::parse(line).get<EpisodeRecord>());
        } catch (std::exception const& e) {
            // A torn final append (no newline) is dropped; anything else is corruption.
            if (!complete) {
                break;
            }
            throw Error{ErrorCode::StorageFailure, path.string() + ":" +
                                                       std::to_string(line_no) + ": " + e.what()};
        }
    }
    return out;
}

}  // namespace mera
