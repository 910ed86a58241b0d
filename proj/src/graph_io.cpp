#include <sstream>

#include <nlohmann/json.hpp>

#include "skillsynth/errors.hpp"
#include "skillsynth/fs_util.hpp"
#include "skillsynth/graph.hpp"
#include "skillsynth/json_lines.hpp"

namespace skillsynth {

using nlohmann::json;

std::string to_json_lines(const SkillGraph& g) {
    std::string out;
    for (const auto& [id, s] : g.scenarios()) {
        json rec = {{"t", "scenario"}, {"id", s.id}, {"text", s.text}, {"provenance", to_string(s.provenance)}};
        if (s.embedding) rec["embedding"] = std::vector<float>(s.embedding->data(), s.embedding->data() + s.embedding->size());
        out += rec.dump() + "\n";
    }
    for (const auto& [id, k] : g.skills()) {
        json rec = {{"t", "skill"}, {"id", k.id},         {"name", k.name},
                    {"body", k.body}, {"source", k.source}, {"verdict", to_string(k.verdict)}};
        if (k.reject_reason) rec["reason"] = to_string(*k.reject_reason);
        out += rec.dump() + "\n";
    }
    for (const auto& [key, verified] : g.transitions()) {
        json rec = {{"t", "edge"}, {"src", key.src}, {"skill", key.skill}, {"dst", key.dst}, {"verified", verified}};
        out += rec.dump() + "\n";
    }
    return out;
}

SkillGraph graph_from_json_lines(std::string_view text, std::string_view source_name) {
    SkillGraph g;
    std::vector<std::pair<std::size_t, Transition>> edges;
    for_each_json_line(text, source_name, [&](const json& rec, std::size_t line) {
        const auto where = std::string(source_name) + ":" + std::to_string(line);
        try {
            const auto t = rec.at("t").get<std::string>();
            if (t == "scenario") {
                Scenario s;
                s.id = rec.at("id").get<std::string>();
                s.text = rec.at("text").get<std::string>();
                s.provenance = provenance_from_string(rec.at("provenance").get<std::string>());
                if (rec.contains("embedding")) {
                    auto v = rec.at("embedding").get<std::vector<float>>();
                    s.embedding = Eigen::Map<const Eigen::VectorXf>(v.data(), static_cast<Eigen::Index>(v.size()));
                }
                g.add_scenario(std::move(s));
            } else if (t == "skill") {
                SkillSpec k;
                k.id = rec.at("id").get<std::string>();
                k.name = rec.at("name").get<std::string>();
                k.body = rec.at("body").get<std::string>();
                k.source = rec.at("source").get<std::string>();
                k.verdict = verdict_from_string(rec.at("verdict").get<std::string>());
                if (rec.contains("reason")) k.reject_reason = reject_reason_from_string(rec.at("reason").get<std::string>());
                g.add_skill(std::move(k));
            } else if (t == "edge") {
                // Records are order-independent; edges resolve after all nodes are read.
                edges.emplace_back(line, Transition{rec.at("src").get<std::string>(), rec.at("skill").get<std::string>(),
                                                    rec.at("dst").get<std::string>(), rec.value("verified", false)});
            } else {
                throw DataError("unknown record type '" + t + "'");
            }
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
    });
    for (const auto& [line, t] : edges) {
        try {
            g.add_transition(t);
        } catch (const DataError& e) {
            throw DataError(std::string(source_name) + ":" + std::to_string(line) + ": " + e.what());
        }
    }
    return g;
}

SkillGraph load_graph(const std::filesystem::path& file) {
    return graph_from_json_lines(read_file(file), file.string());
}

void save_graph(const SkillGraph& g, const std::filesystem::path& file) { atomic_write_file(file, to_json_lines(g)); }

} // namespace skillsynth
