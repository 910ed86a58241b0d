#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "skillsynth/http_providers.hpp"

#include <httplib.h>

#include "skillsynth/errors.hpp"
#include "skillsynth/prompts.hpp"

namespace skillsynth {

using nlohmann::json;

HttpProvider::HttpProvider(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    const auto& url = endpoint_.base_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("provider endpoint needs a scheme: '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_ = url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    const auto dir = endpoint_.prompts_dir.empty() ? default_prompts_dir() : endpoint_.prompts_dir;
    plan_template_ = load_prompt("plan", dir);
    construct_template_ = load_prompt("construct", dir);
}

std::string HttpProvider::tag() const { return "http:" + endpoint_.base_url; }

json HttpProvider::call(const std::string& role, json body) const {
    if (!body.contains("temperature")) body["temperature"] = endpoint_.options.temperature;
    body["seed"] = endpoint_.options.seed;

    httplib::Client client(scheme_host_);
    const auto t = static_cast<time_t>(endpoint_.timeout.count());
    client.set_connection_timeout(t, 0);
    client.set_read_timeout(t, 0);
    client.set_write_timeout(t, 0);
    httplib::Headers headers;
    if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

    const auto res = client.Post(prefix_ + "/" + role, headers, body.dump(), "application/json");
    if (!res) throw ProviderError(role + ": request failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
        throw ProviderError(role + ": HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw ProviderError(role + ": malformed reply: " + e.what());
    }
}

namespace {

template <class T>
T field(const json& j, const char* key, const std::string& role) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ProviderError(role + ": reply field '" + key + "': " + e.what());
    }
}

json skill_json(const SkillSpec& k) {
    return {{"id", k.id}, {"name", k.name}, {"source", k.source}, {"body", k.body}};
}

} // namespace

EmbeddingMatrix HttpProvider::embed(const std::vector<std::string>& texts, const std::string& instruction) {
    const auto reply = call("embed", {{"texts", texts}, {"instruction", instruction}});
    const auto rows = field<std::vector<std::vector<float>>>(reply, "embeddings", "embed");
    if (rows.size() != texts.size()) throw ProviderError("embed: row count mismatch");
    const auto dim = rows.empty() ? 0 : rows.front().size();
    EmbeddingMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != dim) throw ProviderError("embed: ragged embedding rows");
        for (std::size_t d = 0; d < dim; ++d) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
    }
    normalize_rows(m);
    return m;
}

FilterDecision HttpProvider::judge(const SkillSpec& skill) {
    const auto reply = call("filter", {{"skill", skill_json(skill)}});
    FilterDecision d;
    d.retained = field<bool>(reply, "retained", "filter");
    if (!d.retained) {
        try {
            d.reason = reject_reason_from_string(field<std::string>(reply, "reason", "filter"));
        } catch (const DataError& e) {
            throw ProviderError(std::string("filter: ") + e.what());
        }
    }
    return d;
}

InferredScenarios HttpProvider::infer(const SkillSpec& skill) {
    const auto reply = call("infer", {{"skill", skill_json(skill)}});
    return {field<std::vector<std::string>>(reply, "pre", "infer"), field<std::vector<std::string>>(reply, "post", "infer")};
}

JudgeVerdict HttpProvider::judge(const AlignmentQuery& q) {
    const auto reply = call("align", {{"post", {{"id", q.post_id}, {"text", q.post_text}}},
                                      {"pre", {{"id", q.pre_id}, {"text", q.pre_text}}},
                                      {"similarity", q.similarity},
                                      {"direction", to_string(q.direction)},
                                      {"prompt", q.prompt}});
    return {field<bool>(reply, "compatible", "align"), reply.value("rationale", std::string{}), tag()};
}

std::string HttpProvider::merge(const std::vector<std::string>& texts) {
    return field<std::string>(call("merge", {{"texts", texts}}), "text", "merge");
}

JudgeVerdict HttpProvider::judge(const TripleQuery& q) {
    const auto reply = call("triple", {{"src", {{"id", q.key.src}, {"text", q.src_text}}},
                                       {"skill", {{"id", q.key.skill}, {"name", q.skill_name}, {"body", q.skill_body}}},
                                       {"dst", {{"id", q.key.dst}, {"text", q.dst_text}}},
                                       {"prompt", q.prompt}});
    return {field<bool>(reply, "compatible", "triple"), reply.value("rationale", std::string{}), tag()};
}

TaskPlan HttpProvider::plan(const Path& path, const ProviderOptions& options) {
    json body = {{"path",
                  {{"scenarios", path.scenarios},
                   {"skills", path.skills},
                   {"scenario_texts", path.scenario_texts},
                   {"skill_names", path.skill_names}}}};
    body["temperature"] = options.temperature;
    std::string listing;
    for (std::size_t i = 0; i < path.skills.size(); ++i) {
        listing += path.scenario_texts[i] + "\n  --[" + path.skill_names[i] + "]-->\n";
    }
    listing += path.scenario_texts.back() + "\n";
    body["prompt"] = render_template(plan_template_, {{"path", listing}});
    const auto reply = call("plan", body);
    TaskPlan p;
    p.path_ref = path_ref(path);
    p.sub_objectives = field<std::vector<std::string>>(reply, "sub_objectives", "plan");
    p.expected_outputs = reply.value("expected_outputs", std::vector<std::string>{});
    return p;
}

json HttpProvider::step(const json& request) {
    json body = request;
    body["prompt"] = render_template(construct_template_, {{"plan", request.at("plan").dump(2)},
                                                           {"feedback", request.value("feedback", std::string{})}});
    return call("construct", body);
}

RubricVerdict HttpProvider::judge(const TaskInstance& inst, const std::string& prompt) {
    const auto reply = call("rubric", {{"instruction", inst.instruction}, {"prompt", prompt}});
    return {field<bool>(reply, "alignment_ok", "rubric"), field<bool>(reply, "self_contained_ok", "rubric"),
            reply.value("reasons", std::vector<std::string>{})};
}

std::string HttpProvider::extract(const Trajectory&, const std::string& prompt) {
    return field<std::string>(call("segment", {{"prompt", prompt}}), "text", "segment");
}

} // namespace skillsynth
