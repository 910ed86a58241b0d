#include "skillsynth/embedding.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "skillsynth/fs_util.hpp"
#include "skillsynth/json_lines.hpp"

namespace skillsynth {

static_assert(std::endian::native == std::endian::little, "embedding file IO assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'S', 'S', 'E', 'M', 'B', 'E', 'D', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos, const std::string& where) {
    if (pos + 4 > in.size()) throw DataError(where + ": truncated embedding file");
    std::uint32_t v;
    std::memcpy(&v, in.data() + pos, 4);
    pos += 4;
    return v;
}
} // namespace

EmbeddingTable::EmbeddingTable(std::vector<std::string> ids, EmbeddingMatrix rows)
    : ids_(std::move(ids)), rows_(std::move(rows)) {
    if (static_cast<Eigen::Index>(ids_.size()) != rows_.rows()) {
        throw DataError("embedding table has " + std::to_string(ids_.size()) + " ids but " +
                        std::to_string(rows_.rows()) + " rows");
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!lookup_.emplace(ids_[i], i).second) throw DataError("duplicate embedding id " + ids_[i]);
    }
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& id) const {
    auto it = lookup_.find(id);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

std::size_t EmbeddingTable::index_of(const std::string& id) const {
    auto i = find(id);
    if (!i) throw DataError("no embedding for " + id);
    return *i;
}

EmbeddingTable EmbeddingTable::select(const std::vector<std::string>& ids) const {
    EmbeddingMatrix m(static_cast<Eigen::Index>(ids.size()), rows_.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = row(index_of(ids[i]));
    return EmbeddingTable(ids, std::move(m));
}

void EmbeddingTable::require_unit_rows(double tol) const {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!is_unit_norm(row(i), tol)) throw DataError("embedding for " + ids_[i] + " is not unit-norm");
    }
}

void write_embeddings_binary(const EmbeddingTable& t, const std::filesystem::path& file) {
    std::string out(kMagic, sizeof kMagic);
    put_u32(out, static_cast<std::uint32_t>(t.dim()));
    put_u32(out, static_cast<std::uint32_t>(t.size()));
    for (const auto& id : t.ids()) {
        put_u32(out, static_cast<std::uint32_t>(id.size()));
        out += id;
    }
    const auto bytes = static_cast<std::size_t>(t.rows().size()) * sizeof(float);
    out.append(reinterpret_cast<const char*>(t.rows().data()), bytes);
    atomic_write_file(file, out);
}

EmbeddingTable read_embeddings_binary(const std::filesystem::path& file) {
    const auto where = file.string();
    const auto in = read_file(file);
    if (in.size() < 16 || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0) {
        throw DataError(where + ": not an embedding file");
    }
    std::size_t pos = 8;
    const auto dim = get_u32(in, pos, where);
    const auto count = get_u32(in, pos, where);
    std::vector<std::string> ids;
    ids.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = get_u32(in, pos, where);
        if (pos + len > in.size()) throw DataError(where + ": truncated id list");
        ids.emplace_back(in.substr(pos, len));
        pos += len;
    }
    const auto bytes = static_cast<std::size_t>(dim) * count * sizeof(float);
    if (in.size() - pos != bytes) throw DataError(where + ": matrix size does not match header");
    EmbeddingMatrix m(count, dim);
    std::memcpy(m.data(), in.data() + pos, bytes);
    return EmbeddingTable(std::move(ids), std::move(m));
}

std::string embeddings_to_json_lines(const EmbeddingTable& t) {
    std::string out;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto r = t.row(i);
        nlohmann::json rec = {{"id", t.ids()[i]}, {"vector", std::vector<float>(r.data(), r.data() + r.size())}};
        out += rec.dump() + "\n";
    }
    return out;
}

EmbeddingTable embeddings_from_json_lines(std::string_view text, std::string_view source_name) {
    std::vector<std::string> ids;
    std::vector<std::vector<float>> vecs;
    for_each_json_line(text, source_name, [&](const nlohmann::json& rec, std::size_t line) {
        try {
            ids.push_back(rec.at("id").get<std::string>());
            vecs.push_back(rec.at("vector").get<std::vector<float>>());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string(source_name) + ":" + std::to_string(line) + ": " + e.what());
        }
        if (vecs.back().size() != vecs.front().size()) {
            throw DataError(std::string(source_name) + ":" + std::to_string(line) + ": dimension mismatch");
        }
    });
    const Eigen::Index dim = vecs.empty() ? 0 : static_cast<Eigen::Index>(vecs.front().size());
    EmbeddingMatrix m(static_cast<Eigen::Index>(vecs.size()), dim);
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXf>(vecs[i].data(), dim);
    }
    return EmbeddingTable(std::move(ids), std::move(m));
}

} // namespace skillsynth
