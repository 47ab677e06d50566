/* Public C API of the handpose shared library.
 *
 * All functions return hp_status; on failure hp_last_error() carries a
 * thread-local message describing what went wrong. Handles returned through
 * out-parameters are owned by the caller and released with the matching
 * *_free function. Units are meters and degrees throughout; every seeded
 * operation takes a 64-bit seed and is deterministic for a fixed seed.
 */
#ifndef HANDPOSE_H
#define HANDPOSE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hp_status {
  HP_OK = 0,
  HP_ERROR_INVALID_ARGUMENT = 1,
  HP_ERROR_IO = 2,
  HP_ERROR_PARSE = 3,
  HP_ERROR_DEGENERATE = 4,
  HP_ERROR_RUNTIME = 5
} hp_status;

const char* hp_version(void);
const char* hp_last_error(void);

/* ------------------------------------------------------------------ clouds */

typedef struct hp_cloud hp_cloud;

/* xyz holds count * 3 doubles (x0, y0, z0, x1, ...). */
hp_status hp_cloud_create(const double* xyz, size_t count, hp_cloud** out);

/* Format by extension: .ply reads/writes ascii PLY, anything else XYZ text. */
hp_status hp_cloud_read(const char* path, hp_cloud** out);
hp_status hp_cloud_write(const hp_cloud* cloud, const char* path);

size_t hp_cloud_size(const hp_cloud* cloud);

/* Copies all points into xyz_out, which must hold hp_cloud_size * 3 doubles. */
hp_status hp_cloud_copy_points(const hp_cloud* cloud, double* xyz_out);

void hp_cloud_free(hp_cloud* cloud);

/* --------------------------------------------------------- plane removal */

typedef struct hp_plane {
  double nx, ny, nz; /* unit normal */
  double d;          /* plane is n.p + d = 0 */
} hp_plane;

/* RANSAC plane fit followed by background removal: foreground_out receives
 * the points farther than tau from the refined plane. min_consensus <= 0
 * defaults to half the cloud. */
hp_status hp_segment_plane(const hp_cloud* cloud, double tau, int max_iterations,
                           long long min_consensus, uint64_t seed, hp_cloud** foreground_out,
                           hp_plane* plane_out);

hp_status hp_plane_write(const hp_plane* plane, const char* path);

/* ------------------------------------------------------------- clustering */

typedef enum hp_cluster_algo {
  HP_CLUSTER_DBSCAN = 0,
  HP_CLUSTER_ECE = 1,
  HP_CLUSTER_KMEANS = 2
} hp_cluster_algo;

typedef struct hp_cluster_params {
  hp_cluster_algo algo;
  double eps;         /* dbscan neighborhood radius */
  int min_pts;        /* dbscan core threshold, self included */
  double radius;      /* ece adjacency radius */
  int min_size;       /* ece minimum component size */
  int k;              /* kmeans cluster count */
  int max_iterations; /* kmeans iteration cap */
  uint64_t seed;      /* kmeans initialization */
} hp_cluster_params;

/* labels_out must hold hp_cloud_size entries; -1 marks noise. */
hp_status hp_cluster(const hp_cloud* cloud, const hp_cluster_params* params, int32_t* labels_out,
                     int32_t* cluster_count_out);

/* ------------------------------------------- synthetic models and scenes */

/* Generates a prototype cloud from a skeleton config and a model spec file
 * (hand pose, object primitive, or interaction). */
hp_status hp_generate_model(const char* skeleton_path, const char* spec_path, double viewpoint_x,
                            double viewpoint_y, double viewpoint_z, double density, uint64_t seed,
                            hp_cloud** out);

/* Renders a scene spec to a cloud file plus a ground-truth file. When
 * use_seed_override is nonzero, seed_override replaces the spec's seed. */
hp_status hp_generate_scene(const char* spec_path, uint64_t seed_override, int use_seed_override,
                            const char* cloud_path, const char* truth_path);

/* ------------------------------------------------------------ registration */

typedef struct hp_transform {
  double r[9]; /* rotation, row-major */
  double t[3];
} hp_transform;

typedef enum hp_register_mode {
  HP_REGISTER_STANDARD = 0,
  HP_REGISTER_STOCHASTIC = 1
} hp_register_mode;

typedef struct hp_register_params {
  hp_register_mode mode;
  int max_iterations;     /* final pass iteration cap */
  double err;             /* relative error-change stopping threshold */
  int trials;             /* stochastic trial count */
  double sigma;           /* stochastic perturbation scale, meters */
  int inner_max_iterations; /* per-trial iteration cap */
  uint64_t seed;
} hp_register_params;

typedef struct hp_register_result {
  hp_transform transform; /* maps the input model onto the aligned cloud */
  double rmse;            /* nearest-point RMS against the data, meters */
  int iterations;         /* standard mode only; 0 for stochastic */
} hp_register_result;

/* aligned_out may be NULL when the aligned cloud is not needed. */
hp_status hp_register_clouds(const hp_cloud* model, const hp_cloud* data,
                             const hp_register_params* params, hp_register_result* result_out,
                             hp_cloud** aligned_out);

hp_status hp_transform_write(const hp_transform* transform, const char* path);

/* --------------------------------------------------------------- pipeline */

/* Runs the full per-frame chain over frame_paths in the given order, writing
 * the metrics CSV and the per-model pose log. Individual frame failures are
 * skipped (counted in frames_failed_out); the call fails if the config or
 * model library cannot be loaded or every frame fails. */
hp_status hp_run_sequence(const char* config_path, const char* const* frame_paths,
                          size_t frame_count, uint64_t seed_override, int use_seed_override,
                          const char* metrics_csv_path, const char* poses_path,
                          size_t* frames_succeeded_out, size_t* frames_failed_out);

#ifdef __cplusplus
}
#endif

#endif /* HANDPOSE_H */
