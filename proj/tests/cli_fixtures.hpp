#pragma once

#include "pipeline_fixtures.hpp"

#include <nlohmann/json.hpp>

#include <csignal>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

namespace vra::test {

struct Workspace {
    std::vector<std::string> types{"obj_quantity", "obj_color"};
    int per_type = 3;
    int iterations = 3;
    int suite_delay_ms = 0;
    // Suite members answer every call with this failure instead of a reply.
    std::string suite_failure;
    // The Spokesman fails for this question, if set.
    std::string failing_question;
};

inline std::string record_question(const std::string& type, int i)
{
    return type + " question " + std::to_string(i) + "?";
}

inline nlohmann::json mock_entry(const std::string& id, const std::string& script)
{
    return {{"id", id}, {"kind", "mock"}, {"script", script}};
}

// Writes an image, a dataset, mock scripts and config.json under dir and
// returns the config path. The judge matches records with even index.
inline std::filesystem::path write_workspace(const std::filesystem::path& dir, const Workspace& ws = {})
{
    write_png(dir / "images" / "scene.png");
    std::string data;
    std::string judge_rules = R"({"role":"judge","reply":"0"})";
    for (auto const& type : ws.types)
        for (int i = 0; i < ws.per_type; ++i)
        {
            data += nlohmann::json{{"id", type + "-" + std::to_string(i)},
                                   {"image_path", "images/scene.png"},
                                   {"question", record_question(type, i)},
                                   {"ground_truth", "answer"},
                                   {"type", type}}
                        .dump() +
                    "\n";
            if (i % 2 == 0)
                judge_rules += R"(,{"role":"judge","question":)" + nlohmann::json(record_question(type, i)).dump() +
                               R"(,"reply":"1. They agree."})";
        }
    write_text(dir / "data.jsonl", data);

    auto backbone = nlohmann::json::parse(backbone_script(ws.iterations));
    if (!ws.failing_question.empty())
        backbone["rules"].push_back({{"role", "spokesman"}, {"question", ws.failing_question}, {"fail", "status:500"}});
    write_text(dir / "scripts" / "backbone.json", backbone.dump(2));
    write_text(dir / "scripts" / "captioner.json",
               R"({"rules":[{"role":"captioner","reply":"An airport with two runways."}]})");
    for (std::string id : {"vlm1", "vlm2"})
        write_text(dir / "scripts" / (id + ".json"),
                   ws.suite_failure.empty()
                       ? suite_script(id, ws.suite_delay_ms)
                       : R"({"rules":[{"role":"vision_suite","fail":")" + ws.suite_failure + R"("}]})");
    write_text(dir / "scripts" / "judge.json", R"({"rules":[)" + judge_rules + "]}");

    nlohmann::json config{
        {"pipeline",
         {{"backbone", mock_entry("backbone", "scripts/backbone.json")},
          {"captioner", mock_entry("captioner", "scripts/captioner.json")},
          {"suite", {mock_entry("vlm1", "scripts/vlm1.json"), mock_entry("vlm2", "scripts/vlm2.json")}},
          {"judge", mock_entry("judge", "scripts/judge.json")},
          {"iterations", ws.iterations}}},
        {"dataset_path", "data.jsonl"},
        {"sample_n", 50},
        {"seed", 11},
        {"output_dir", "out"},
        {"concurrency_limit", 1},
        {"template_dir", VRA_TEMPLATE_DIR},
        {"clock", {{"start", "2025-01-01T00:00:00Z"}, {"step_ms", 1500}}}};
    write_text(dir / "config.json", config.dump(2));
    return dir / "config.json";
}

// A child process running argv with stdout and stderr sent to files.
class Child {
public:
    Child(const std::vector<std::string>& argv, const std::filesystem::path& out, const std::filesystem::path& err)
    {
        pid_ = ::fork();
        if (pid_ == 0)
        {
            if (!std::freopen(out.c_str(), "w", stdout) || !std::freopen(err.c_str(), "w", stderr))
                ::_exit(127);
            std::vector<char*> args;
            for (auto const& a : argv)
                args.push_back(const_cast<char*>(a.c_str()));
            args.push_back(nullptr);
            ::execv(args[0], args.data());
            ::_exit(127);
        }
    }

    void kill() { ::kill(pid_, SIGKILL); }

    // Exit code, or -signal when killed.
    int wait()
    {
        int status = 0;
        ::waitpid(pid_, &status, 0);
        return WIFEXITED(status) ? WEXITSTATUS(status) : -WTERMSIG(status);
    }

private:
    pid_t pid_ = -1;
};

inline int run_process(const std::vector<std::string>& argv, const std::filesystem::path& log_dir)
{
    return Child(argv, log_dir / "stdout.txt", log_dir / "stderr.txt").wait();
}

}  // namespace vra::test
