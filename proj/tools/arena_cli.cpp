// SPDX-License-Identifier: Apache-2.0
// arena: edge server, camera client, in-process replay and synthetic data.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "arena/channel.hpp"
#include "arena/image_io.hpp"
#include "arena/mot.hpp"
#include "arena/replay.hpp"
#include "arena/synth.hpp"

namespace {

using namespace arena;

struct CommonOptions {
    std::string engine_config;
    std::string weights;
    std::string annotations;
    double oracle_drop = 0.0;
    double oracle_jitter = 0.0;
    std::uint64_t oracle_seed = 0;
    std::string detector = "oracle";

    std::string frames;
    std::uint64_t start_id = 1;
    double p = 0.9;
    std::uint32_t F = 200;
    int m = 1;
    double beta = 10.0;
    int k_lower = 1;
    int k_upper = 15;
    std::optional<int> k_fixed;
    int flow_block = 8;
    int flow_radius = 8;
    std::uint64_t seed = 0;
    std::string report_out;
    double link_mbps = 93.9;
};

void add_engine_options(CLI::App* app, CommonOptions& o) {
    app->add_option("--engine-config", o.engine_config, "Engine configuration JSON");
    app->add_option("--weights", o.weights, "Weights file (overrides the seeded init)");
}

void add_server_options(CLI::App* app, CommonOptions& o) {
    app->add_option("--annotations", o.annotations, "MOT ground-truth CSV for the oracle detector");
    app->add_option("--oracle-drop", o.oracle_drop, "Oracle drop probability")->check(CLI::Range(0.0, 0.999999));
    app->add_option("--oracle-jitter", o.oracle_jitter, "Oracle coordinate jitter, pixels")->check(CLI::NonNegativeNumber);
    app->add_option("--oracle-seed", o.oracle_seed, "Oracle RNG seed");
    app->add_option("--detector", o.detector, "oracle or head")->check(CLI::IsMember({"oracle", "head"}));
}

void add_camera_options(CLI::App* app, CommonOptions& o) {
    app->add_option("--frames", o.frames, "Directory of PGM/PPM frames")->required();
    app->add_option("--start-id", o.start_id, "Frame id of the first frame");
    app->add_option("--p", o.p, "PPS sampling rate")->check(CLI::Range(0.000001, 1.0));
    app->add_option("--F", o.F, "PPS pixel-difference threshold");
    app->add_option("--m", o.m, "PPS box margin, patches")->check(CLI::NonNegativeNumber);
    app->add_option("--beta", o.beta, "AKIS optical-flow threshold");
    app->add_option("--k-lower", o.k_lower, "AKIS lower interval bound");
    app->add_option("--k-upper", o.k_upper, "AKIS upper interval bound");
    app->add_option("--k-fixed", o.k_fixed, "Disable AKIS and use this interval");
    app->add_option("--flow-block", o.flow_block, "Block size of the flow estimator");
    app->add_option("--flow-radius", o.flow_radius, "Search radius of the flow estimator");
    app->add_option("--seed", o.seed, "PPS RNG seed");
    app->add_option("--report-out", o.report_out, "Write the JSON report here (stdout when omitted)");
    app->add_option("--link-mbps", o.link_mbps, "Uplink rate for the transmission model");
    if (!app->get_option_no_throw("--annotations")) app->add_option("--annotations", o.annotations, "MOT ground truth for accuracy");
}

EngineConfig engine_config(const CommonOptions& o, const std::optional<Frame>& sample) {
    EngineConfig c;
    if (!o.engine_config.empty()) {
        std::ifstream is(o.engine_config);
        if (!is) throw std::runtime_error("cannot open " + o.engine_config);
        c = engine_config_from_json(nlohmann::json::parse(is));
    } else if (sample) {
        c.frame_width = sample->width;
        c.frame_height = sample->height;
        c.channels = sample->channels;
    }
    if (!o.weights.empty()) c = Engine::load(o.weights).config();
    c.validate();
    return c;
}

ServerConfig server_config(const CommonOptions& o) {
    ServerConfig s;
    s.oracle = OracleConfig{o.oracle_drop, o.oracle_jitter, o.oracle_seed};
    s.detector = o.detector == "head" ? DetectorMode::Head : DetectorMode::Oracle;
    return s;
}

CameraConfig camera_config(const CommonOptions& o) {
    CameraConfig c;
    c.pps = PpsConfig{o.p, o.F, o.m, o.seed};
    c.akis = AkisConfig{o.beta, o.k_lower, o.k_upper, o.flow_block, o.flow_radius};
    c.fixed_interval = o.k_fixed;
    return c;
}

void emit_report(const ReplayReport& report, const std::string& path) {
    const std::string text = report.to_json().dump(2) + "\n";
    if (path.empty()) {
        std::cout << text;
    } else {
        std::ofstream os(path);
        os << text;
        if (!os) throw std::runtime_error("cannot write report " + path);
        spdlog::info("report written to {}", path);
    }
    if (!report.complete) spdlog::error("replay incomplete: {}", report.error);
}

int run_replay(const CommonOptions& o, const std::string& mode, const std::string& connect) {
    auto stream = PnmFrameStream::from_directory(o.frames, o.start_id);
    std::optional<Frame> first = stream.next();
    if (!first) throw std::runtime_error("empty frame directory");
    auto rest = load_frames(stream);
    rest.insert(rest.begin(), *first);
    MemoryFrameStream frames(std::move(rest));

    ReplayConfig cfg;
    cfg.camera = camera_config(o);
    cfg.engine = engine_config(o, first);
    if (!o.weights.empty()) cfg.weights = o.weights;
    cfg.server = server_config(o);
    cfg.cost.link_mbps = o.link_mbps;
    if (mode == "socket") {
        cfg.mode = ReplayMode::Socket;
        cfg.record_wall_clock = true;
        if (!connect.empty()) {
            const auto colon = connect.rfind(':');
            if (colon == std::string::npos) throw std::runtime_error("--connect expects host:port");
            cfg.connect_host = connect.substr(0, colon);
            cfg.connect_port = static_cast<std::uint16_t>(std::stoi(connect.substr(colon + 1)));
        }
    }
    std::optional<AnnotationStore> store;
    if (!o.annotations.empty()) store = load_mot_annotations(o.annotations);
    const ReplayReport report = replay(frames, store ? &*store : nullptr, cfg);
    emit_report(report, o.report_out);
    return report.complete ? 0 : 2;
}

std::vector<SynthObject> parse_objects(const std::string& spec) {
    std::vector<SynthObject> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        SynthObject o;
        char c1, c2, c3, c4, c5;
        std::stringstream is(item);
        if (!(is >> o.x >> c1 >> o.y >> c2 >> o.w >> c3 >> o.h >> c4 >> o.vx >> c5 >> o.vy))
            throw std::runtime_error("object spec must be x,y,w,h,vx,vy: " + item);
        out.push_back(o);
    }
    return out;
}

void configure_logging() {
    if (const char* lvl = std::getenv("ARENA_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"Patch-of-interest offloading toolkit: edge server, camera, replay harness"};
    app.require_subcommand(1);

    CommonOptions o;
    std::uint16_t port = 9730;
    std::string connect;
    std::string mode = "loopback";

    auto* serve = app.add_subcommand("serve", "Run the edge server");
    serve->add_option("--port", port, "TCP port");
    std::string bind = "0.0.0.0";
    serve->add_option("--bind", bind, "Bind address");
    add_engine_options(serve, o);
    add_server_options(serve, o);

    auto* camera = app.add_subcommand("camera", "Stream frames to an edge server");
    camera->add_option("--connect", connect, "host:port of the edge server")->required();
    add_engine_options(camera, o);
    add_camera_options(camera, o);

    auto* rep = app.add_subcommand("replay", "Camera and server in one process");
    rep->add_option("--mode", mode, "loopback or socket")->check(CLI::IsMember({"loopback", "socket"}));
    add_engine_options(rep, o);
    add_server_options(rep, o);
    add_camera_options(rep, o);

    SynthSpec synth_spec;
    std::string objects = "8,8,16,16,2,0";
    std::string out_dir;
    std::optional<int> flat;
    auto* synth = app.add_subcommand("synth", "Write a synthetic sequence as PGM/PPM frames plus gt.txt");
    synth->add_option("--width", synth_spec.width);
    synth->add_option("--height", synth_spec.height);
    synth->add_option("--channels", synth_spec.channels)->check(CLI::IsMember({1, 3}));
    synth->add_option("--frames", synth_spec.frames);
    synth->add_option("--start-id", synth_spec.start_id);
    synth->add_option("--seed", synth_spec.seed);
    synth->add_option("--objects", objects, "x,y,w,h,vx,vy;...");
    synth->add_option("--flat-background", flat, "Uniform background level instead of noise")->check(CLI::Range(0, 255));
    synth->add_option("--out", out_dir, "Output directory")->required();

    std::string weights_out;
    auto* weights = app.add_subcommand("weights", "Write the seeded engine weights to a file");
    weights->add_option("--engine-config", o.engine_config, "Engine configuration JSON");
    weights->add_option("--out", weights_out, "Weights file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) {
            const Engine engine = o.weights.empty() ? Engine(engine_config(o, std::nullopt)) : Engine::load(o.weights);
            AnnotationStore store;
            if (!o.annotations.empty()) store = load_mot_annotations(o.annotations);
            const ServerConfig scfg = server_config(o);
            TcpServer server(port, [&] { return std::make_unique<ServerSession>(engine, &store, scfg); }, bind);
            server.run();
            return 0;
        }
        if (*camera) return run_replay(o, "socket", connect);
        if (*rep) return run_replay(o, mode, "");
        if (*synth) {
            synth_spec.objects = parse_objects(objects);
            if (flat) synth_spec.flat_background = static_cast<std::uint8_t>(*flat);
            const SynthSequence seq = synth_sequence(synth_spec);
            std::filesystem::create_directories(out_dir);
            for (const Frame& f : seq.frames) {
                std::ostringstream name;
                name << std::setw(6) << std::setfill('0') << f.frame_id << (f.channels == 1 ? ".pgm" : ".ppm");
                write_pnm(std::filesystem::path(out_dir) / name.str(), f);
            }
            std::ofstream gt(std::filesystem::path(out_dir) / "gt.txt");
            gt << format_mot_annotations(seq.annotations);
            spdlog::info("wrote {} frames to {}", seq.frames.size(), out_dir);
            return 0;
        }
        if (*weights) {
            const Engine engine(engine_config(o, std::nullopt));
            engine.save(weights_out);
            spdlog::info("wrote {} parameters to {}", engine.parameter_count(), weights_out);
            return 0;
        }
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
