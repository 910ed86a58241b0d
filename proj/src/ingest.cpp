#include "skillsynth/ingest.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "skillsynth/errors.hpp"
#include "skillsynth/fs_util.hpp"
#include "skillsynth/json_lines.hpp"
#include "skillsynth/parallel.hpp"

namespace skillsynth {

using nlohmann::json;

std::vector<SkillSpec> ingest_skill_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError("skill directory not found: " + dir.string());
    std::vector<std::filesystem::path> docs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".md") docs.push_back(entry.path());
    }
    std::sort(docs.begin(), docs.end());

    std::vector<SkillSpec> out;
    for (const auto& doc : docs) {
        auto sidecar = doc;
        sidecar.replace_extension(".json");
        if (!std::filesystem::exists(sidecar)) throw DataError("missing metadata sidecar " + sidecar.string());
        json meta;
        try {
            meta = json::parse(read_file(sidecar));
        } catch (const json::parse_error& e) {
            throw DataError(sidecar.string() + ": " + e.what());
        }
        SkillSpec k;
        try {
            k.name = meta.at("name").get<std::string>();
            k.source = meta.at("source").get<std::string>();
        } catch (const json::exception& e) {
            throw DataError(sidecar.string() + ": " + e.what());
        }
        k.body = read_file(doc);
        k.id = SkillSpec::make_id(k.source, k.name);
        out.push_back(std::move(k));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].id == out[i - 1].id) throw DataError("duplicate skill (source, name): " + out[i].name);
    }
    return out;
}

std::string skills_to_json_lines(const std::vector<SkillSpec>& skills) {
    std::string out;
    for (const auto& k : skills) {
        json rec = {{"id", k.id},         {"name", k.name},
                    {"body", k.body},     {"source", k.source},
                    {"verdict", to_string(k.verdict)}};
        if (k.reject_reason) rec["reason"] = to_string(*k.reject_reason);
        out += rec.dump() + "\n";
    }
    return out;
}

std::vector<SkillSpec> skills_from_json_lines(std::string_view text, std::string_view source_name) {
    std::vector<SkillSpec> out;
    for_each_json_line(text, source_name, [&](const json& rec, std::size_t line) {
        try {
            SkillSpec k;
            k.id = rec.at("id").get<std::string>();
            k.name = rec.at("name").get<std::string>();
            k.body = rec.at("body").get<std::string>();
            k.source = rec.at("source").get<std::string>();
            k.verdict = verdict_from_string(rec.value("verdict", "pending"));
            if (rec.contains("reason")) k.reject_reason = reject_reason_from_string(rec.at("reason").get<std::string>());
            out.push_back(std::move(k));
        } catch (const json::exception& e) {
            throw DataError(std::string(source_name) + ":" + std::to_string(line) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(std::string(source_name) + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    return out;
}

std::vector<SkillSpec> filter_skills(std::vector<SkillSpec> skills, SkillFilter& filter, std::size_t max_in_flight,
                                     const RetryPolicy& retry) {
    std::vector<std::optional<FilterDecision>> decisions(skills.size());
    std::vector<std::string> errors(skills.size());
    parallel_for(skills.size(), max_in_flight, [&](std::size_t i) {
        decisions[i] = with_retries(retry, [&] { return filter.judge(skills[i]); }, &errors[i]);
    });
    for (std::size_t i = 0; i < skills.size(); ++i) {
        if (!decisions[i]) throw ProviderError("skill filter failed for " + skills[i].id + ": " + errors[i]);
        if (decisions[i]->retained) {
            skills[i].verdict = VerdictStatus::Retained;
            skills[i].reject_reason.reset();
        } else {
            if (!decisions[i]->reason) throw ProviderError("skill filter rejected " + skills[i].id + " without a reason");
            skills[i].verdict = VerdictStatus::Rejected;
            skills[i].reject_reason = decisions[i]->reason;
        }
    }
    return skills;
}

SkillGraph infer_scenarios(const std::vector<SkillSpec>& skills, ScenarioInferrer& inferrer, std::size_t max_in_flight,
                           const RetryPolicy& retry) {
    std::vector<const SkillSpec*> retained;
    for (const auto& k : skills) {
        if (k.retained()) retained.push_back(&k);
    }
    std::vector<std::optional<InferredScenarios>> inferred(retained.size());
    std::vector<std::string> errors(retained.size());
    parallel_for(retained.size(), max_in_flight, [&](std::size_t i) {
        inferred[i] = with_retries(retry, [&] { return inferrer.infer(*retained[i]); }, &errors[i]);
    });

    SkillGraph g;
    for (std::size_t i = 0; i < retained.size(); ++i) {
        const auto& k = *retained[i];
        if (!inferred[i]) throw ProviderError("scenario inference failed for " + k.id + ": " + errors[i]);
        g.add_skill(k);
        auto add_all = [&](const std::vector<std::string>& texts, Provenance role) {
            std::vector<std::string> ids;
            for (const auto& text : texts) {
                if (text.empty()) continue;
                Scenario s{Scenario::make_id(text), text, role, std::nullopt};
                ids.push_back(s.id);
                g.add_scenario(std::move(s));
            }
            return ids;
        };
        const auto pre = add_all(inferred[i]->pre, Provenance::InferredPre);
        const auto post = add_all(inferred[i]->post, Provenance::InferredPost);
        g.add_transitions(k.id, pre, post);
    }
    return g;
}

void embed_scenarios(SkillGraph& g, Embedder& embedder, const std::string& instruction, std::size_t batch) {
    std::vector<std::string> ids, texts;
    for (const auto& [id, s] : g.scenarios()) {
        ids.push_back(id);
        texts.push_back(s.text);
    }
    batch = std::max<std::size_t>(batch, 1);
    for (std::size_t start = 0; start < texts.size(); start += batch) {
        const auto end = std::min(texts.size(), start + batch);
        std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        const auto rows = embedder.embed(chunk, instruction);
        if (rows.rows() != static_cast<Eigen::Index>(chunk.size())) {
            throw ProviderError("embedder returned " + std::to_string(rows.rows()) + " rows for " +
                                std::to_string(chunk.size()) + " texts");
        }
        for (std::size_t i = start; i < end; ++i) {
            Eigen::VectorXf v = rows.row(static_cast<Eigen::Index>(i - start)).transpose();
            if (!is_unit_norm(v)) throw ProviderError("embedder returned a non-unit vector for " + ids[i]);
            g.mutable_scenario(ids[i]).embedding = std::move(v);
        }
    }
}

} // namespace skillsynth
