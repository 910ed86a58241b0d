#include <doctest.h>

#include <unistd.h>

#include "skillsynth/errors.hpp"
#include "skillsynth/sandbox.hpp"

using namespace skillsynth;
namespace fs = std::filesystem;

namespace {

struct Root {
    fs::path path = fs::temp_directory_path() / ("skillsynth-sandbox-test-" + std::to_string(::getpid()));
    Root() { fs::create_directories(path); }
    ~Root() { fs::remove_all(path); }
};

ExecRequest req(FileManifest files, std::vector<std::string> cmds, int timeout_ms = 5000) {
    return {std::move(files), std::move(cmds), std::chrono::milliseconds(timeout_ms), ""};
}

} // namespace

TEST_CASE("path safety") {
    CHECK(is_safe_relative_path("a/b.txt"));
    CHECK(is_safe_relative_path("tests/test.sh"));
    CHECK_FALSE(is_safe_relative_path("/etc/passwd"));
    CHECK_FALSE(is_safe_relative_path("../x"));
    CHECK_FALSE(is_safe_relative_path("a/../../x"));
    CHECK_FALSE(is_safe_relative_path(""));
}

TEST_CASE("files are materialized and commands stop at the first failure") {
    Root root;
    TempDirExecutor exec(root.path);
    const auto r = exec.run(req({{"dir/in.txt", "payload\n"}}, {"cat dir/in.txt", "exit 3", "echo unreachable"}));
    CHECK(r.exit_code == 3);
    CHECK_FALSE(r.timed_out);
    CHECK(r.log.find("payload") != std::string::npos);
    CHECK(r.log.find("unreachable") == std::string::npos);
    CHECK(fs::is_empty(root.path));
}

TEST_CASE("restricted environment") {
    Root root;
    TempDirExecutor exec(root.path);
    const auto r = exec.run(req({}, {"echo \"H=$HOME\"; echo \"P=$PATH\"; echo \"L=$LANG\"; pwd; echo \"X=${SECRET_TOKEN:-unset}\""}));
    CHECK(r.exit_code == 0);
    CHECK(r.log.find("P=/usr/local/bin:/usr/bin:/bin") != std::string::npos);
    CHECK(r.log.find("L=C") != std::string::npos);
    CHECK(r.log.find("X=unset") != std::string::npos);
    CHECK(r.log.find("H=" + root.path.string()) != std::string::npos);
}

TEST_CASE("timeout kills the whole process group") {
    Root root;
    TempDirExecutor exec(root.path);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = exec.run(req({}, {"(sleep 20 &) ; sleep 20"}, 500));
    CHECK(r.timed_out);
    CHECK(r.exit_code == 124);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));
}

TEST_CASE("unsafe manifest paths are an infrastructure error") {
    Root root;
    TempDirExecutor exec(root.path);
    CHECK_THROWS_AS(exec.run(req({{"../escape.txt", "x"}}, {"true"})), InfraError);
    CHECK_FALSE(fs::exists(root.path.parent_path() / "escape.txt"));
}

TEST_CASE("an unusable root is an infrastructure error") {
    TempDirExecutor exec("/dev/null/skillsynth-root");  // a file cannot hold a directory
    CHECK_THROWS_AS(exec.run(req({}, {"true"})), InfraError);
}

TEST_CASE("log is capped") {
    Root root;
    TempDirExecutor exec(root.path, 1000);
    const auto r = exec.run(req({}, {"yes | head -n 5000"}));
    CHECK(r.log.size() <= 1200);
}
