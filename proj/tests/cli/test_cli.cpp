#include "doctest.h"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "affsurf/builders.hpp"
#include "affsurf/io.hpp"
#include "json.hpp"

using namespace affsurf;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

std::string work(const std::string& name) { return std::string(AFFSURF_CLI_WORKDIR) + "/" + name; }

Run run(const std::string& args, const std::string& env = "")
{
    std::string cmd = env + (env.empty() ? "" : " ") + "'" + std::string(AFFSURF_CLI_PATH) + "' " + args + " 2>" +
                      work("stderr.txt");
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string last_stderr()
{
    std::ifstream f(work("stderr.txt"));
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string slurp(const std::string& path)
{
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Tags balance and every element closes.
bool well_formed_xml(const std::string& s)
{
    if (s.rfind("<?xml", 0) != 0) return false;
    std::vector<std::string> stack;
    size_t i = s.find("?>");
    if (i == std::string::npos) return false;
    while ((i = s.find('<', i)) != std::string::npos) {
        size_t j = s.find('>', i);
        if (j == std::string::npos) return false;
        std::string tag = s.substr(i + 1, j - i - 1);
        i = j + 1;
        if (tag.empty()) return false;
        if (tag.back() == '/') continue;
        std::string name = tag.substr(tag[0] == '/' ? 1 : 0);
        name = name.substr(0, name.find_first_of(" \t\n"));
        if (tag[0] == '/') {
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else {
            stack.push_back(name);
        }
    }
    return stack.empty();
}

}  // namespace

TEST_CASE("validate a cushion file")
{
    write_surface(build_cushion(), work("cushion.affsurf"));
    Run r = run("validate " + work("cushion.affsurf"));
    CHECK(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["report"]["ok"] == true);
    CHECK(j["report"]["residue_sum"][0].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(j["report"]["residue_sum"][1].get<double>() == doctest::Approx(0.0));
    CHECK(j["records"].size() == 4);
}

TEST_CASE("delaunay on the square torus with one mark")
{
    write_surface(build_flat_torus(1.0, kI, {cx(0.0, 0.0)}), work("sqtorus1mark.affsurf"));
    Run r = run("delaunay " + work("sqtorus1mark.affsurf") + " --svg " + work("sqtorus.svg"));
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["counts"]["t"] == 2);
    CHECK(j["counts"]["beta"] == 0);
    CHECK(j["counts"]["identity_ok"] == true);
    CHECK(j["segments"].size() == 2);
    CHECK(j["components"].size() == 1);
    for (const auto& g : j["segments"]) CHECK(g["length_developed"].get<double>() <= std::sqrt(2.0) + 1e-9);
    std::string svg = slurp(work("sqtorus.svg"));
    CHECK(well_formed_xml(svg));
    CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("gamma loop integral")
{
    Run r = run("gamma --res 2.5,0");
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["I"][0].get<double>() == doctest::Approx(1.772454).epsilon(1e-6));
    CHECK(j["agreement"].get<double>() < 1e-8);
}

TEST_CASE("exit codes and diagnostics")
{
    Run missing = run("validate " + work("does-not-exist.affsurf"));
    CHECK(missing.code == 1);
    auto d = json::parse(last_stderr());
    CHECK(d["level"] == "error");
    CHECK(d.contains("kind"));

    CHECK(run("").code == 1);
    CHECK(run("--help").code == 0);
    CHECK(run("--eps 1 gamma --res 2.5,0").code == 1);
    CHECK(run("gamma --res 2.5,0", "AFFSURF_EPS=1e-6").code == 0);
    CHECK(run("gamma --res 2.5,0", "AFFSURF_EPS=0.5").code == 1);
    CHECK(run("classify --res abc").code == 1);
    CHECK(run("construct --res 5,0 --max-fuchsian 1").code == 1);

    std::ofstream(work("broken.affsurf")) << "{\"format\": \"affsurf-v1\", \"pieces\": [";
    CHECK(run("validate " + work("broken.affsurf")).code == 1);
}

TEST_CASE("pivot budget from the environment")
{
    write_surface(build_cushion(), work("cushion.affsurf"));
    CHECK(run("delaunay " + work("cushion.affsurf"), "AFFSURF_BUDGET_PIVOTS=1").code == 1);
    CHECK(run("delaunay " + work("cushion.affsurf")).code == 0);
}

TEST_CASE("file round-trip through the command line")
{
    Run b = run("build hex-torus --mark 0.1,0.2 --mark 0.5,0.4 --out " + work("hex.affsurf"));
    REQUIRE(b.code == 0);
    Run first = run("validate " + work("hex.affsurf"));
    write_surface(read_surface(work("hex.affsurf")), work("hex2.affsurf"));
    Run second = run("validate " + work("hex2.affsurf"));
    CHECK(first.code == 0);
    CHECK(first.out == second.out);
    CHECK(slurp(work("hex.affsurf")) == slurp(work("hex2.affsurf")));
}

TEST_CASE("construct, graft and model")
{
    Run c = run("construct --res 0.25,-0.5 --out " + work("c.affsurf"));
    REQUIRE(c.code == 0);
    auto j = json::parse(c.out);
    CHECK(j["roster"].size() == 2);
    CHECK(j["report"]["residue_sum"][0].get<double>() == doctest::Approx(2.0));
    CHECK(run("validate " + work("c.affsurf")).code == 0);

    Run g = run("classify " + work("c.affsurf"));
    REQUIRE(g.code == 0);
    CHECK(json::parse(g.out)["records"].size() == 2);

    run("build strip-cylinder --out " + work("strip.affsurf"));
    Run gr = run("graft " + work("strip.affsurf") + " --slit C:0,0.75:-1,0 --angle 3.141592653589793 --any-start");
    REQUIRE(gr.code == 0);
    CHECK(json::parse(gr.out)["report"]["residue_sum"][0].get<double>() == doctest::Approx(2.0));
    CHECK(run("graft " + work("strip.affsurf") + " --slit C:0,0.75:-1,0 --angle 3.14").code == 1);

    Run m = run("model --d 3 --res 0.5,0.2 --u 1,0 --u 0,1 --R 4 --emit-surface " + work("m.affsurf"));
    REQUIRE(m.code == 0);
    CHECK(json::parse(m.out)["margin"].get<double>() > 0.0);
    CHECK(run("validate " + work("m.affsurf")).code == 0);
}

TEST_CASE("trace with an overlay")
{
    write_surface(build_flat_torus(1.0, kI, {cx(0.0, 0.0)}), work("sqtorus1mark.affsurf"));
    Run t = run("trace " + work("sqtorus1mark.affsurf") + " --piece 0 --pos 0.3,0.2 --dir 1,0.37 --tmax 5 --svg " +
                work("trace.svg"));
    REQUIRE(t.code == 0);
    auto j = json::parse(t.out);
    CHECK(j["crossings"].get<int>() > 0);
    CHECK(well_formed_xml(slurp(work("trace.svg"))));
    CHECK(run("trace " + work("sqtorus1mark.affsurf") + " --piece nope --pos 0,0 --dir 1,0").code == 1);
}

TEST_CASE("normal form from a series file")
{
    std::ofstream(work("series.json")) << R"({"gamma":{"lo":-2,"coeffs":[[1,0],[0.5,0],[0.2,0]]},"N":3})";
    Run r = run("normalform " + work("series.json"));
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["d"] == 2);
    CHECK(j["residue_coeff"][0].get<double>() == doctest::Approx(0.5));
}
