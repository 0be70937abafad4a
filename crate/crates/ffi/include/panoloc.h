#ifndef PANOLOC_H
#define PANOLOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PanolocStatus {
  PANOLOC_STATUS_OK = 0,
  PANOLOC_STATUS_NULL_POINTER = 1,
  PANOLOC_STATUS_INVALID_ARGUMENT = 2,
  PANOLOC_STATUS_OUT_OF_DOMAIN = 3,
  PANOLOC_STATUS_NO_CONVERGENCE = 4,
  // Rays are parallel, vertical or separated by less than the floor.
  PANOLOC_STATUS_ILL_CONDITIONED = 5,
  PANOLOC_STATUS_BEHIND_SENSOR = 6,
  PANOLOC_STATUS_IO = 7,
  PANOLOC_STATUS_CONFIG = 8,
  // The run finished but some slices were skipped.
  PANOLOC_STATUS_PARTIAL = 9,
  PANOLOC_STATUS_PANIC = 10,
} PanolocStatus;

// Growable set of bearing observations.
typedef struct PanolocObservationSet PanolocObservationSet;

// Located objects from [`panoloc_locate`].
typedef struct PanolocResult PanolocResult;

// A bearing ray on the working plane.
typedef struct PanolocRay {
  double easting;
  double northing;
  double bearing;
} PanolocRay;

typedef struct PanolocIntersection {
  double easting;
  double northing;
  double dist_a;
  double dist_b;
  // Angular separation of the rays, degrees.
  double separation;
} PanolocIntersection;

typedef struct PanolocClusterParams {
  double eps;
  size_t min_pts;
  double min_separation;
  double vertical_epsilon;
  double max_detection_range;
  double nominal_range;
} PanolocClusterParams;

typedef struct PanolocObject {
  double latitude;
  double longitude;
  double easting;
  double northing;
  double latitude_sd;
  double longitude_sd;
  double object_distance_mean;
  size_t observation_count;
  size_t retained_pairs;
} PanolocObject;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into this library on the same thread.
const char *panoloc_last_error(void);

// Library version as a static NUL-terminated string.
const char *panoloc_version(void);

// Geographic degrees to state-plane feet.
//
// # Safety
// `easting` and `northing` must be valid for writes.
enum PanolocStatus panoloc_project(double latitude,
                                   double longitude,
                                   double *easting,
                                   double *northing);

// State-plane feet to geographic degrees.
//
// # Safety
// `latitude` and `longitude` must be valid for writes.
enum PanolocStatus panoloc_unproject(double easting,
                                     double northing,
                                     double *latitude,
                                     double *longitude);

// Corrected heading from a displacement between consecutive fixes.
//
// # Safety
// `heading` must be valid for writes.
enum PanolocStatus panoloc_correct_heading(double delta_easting,
                                           double delta_northing,
                                           double *heading);

// Azimuth of a photosphere column for a panorama `width` pixels wide.
//
// # Safety
// `bearing` must be valid for writes.
enum PanolocStatus panoloc_pixel_bearing(double heading,
                                         double column,
                                         uint32_t width,
                                         double *bearing);

// Directional class id (1..=32) of a bearing; 0 for a non-finite input.
uint8_t panoloc_classify_directional(double bearing);

// Static code ("N", "NbE", ...) for a directional class id, or NULL.
const char *panoloc_directional_code(uint8_t id);

// Intersects two rays. A separation floor of 2° and a vertical tolerance
// of 0.05° are typical.
//
// # Safety
// `a`, `b` must point to valid rays and `out` must be valid for writes.
enum PanolocStatus panoloc_intersect(const struct PanolocRay *a,
                                     const struct PanolocRay *b,
                                     double min_separation,
                                     double vertical_epsilon,
                                     struct PanolocIntersection *out);

struct PanolocClusterParams panoloc_cluster_params_default(void);

struct PanolocObservationSet *panoloc_observations_new(void);

// Appends one observation. `class_name` is e.g. "stop_sign";
// `capture_ref` identifies the capture and may be NULL.
//
// # Safety
// `set` must come from [`panoloc_observations_new`]; strings must be
// NUL-terminated or NULL where allowed.
enum PanolocStatus panoloc_observations_push(struct PanolocObservationSet *set,
                                             struct PanolocRay ray,
                                             const char *class_name,
                                             const char *capture_ref,
                                             double confidence,
                                             uint64_t sequence_index);

// # Safety
// `set` must come from [`panoloc_observations_new`] or be NULL.
size_t panoloc_observations_len(const struct PanolocObservationSet *set);

// # Safety
// `set` must come from [`panoloc_observations_new`] and not be used afterwards.
void panoloc_observations_free(struct PanolocObservationSet *set);

// Clusters the observations and locates one object per cluster.
// `params` may be NULL for defaults. On success `*out` owns a result that
// must be released with [`panoloc_result_free`].
//
// # Safety
// `set` must be a live observation set and `out` valid for writes.
enum PanolocStatus panoloc_locate(const struct PanolocObservationSet *set,
                                  const struct PanolocClusterParams *params,
                                  struct PanolocResult **out);

// # Safety
// `result` must come from [`panoloc_locate`] or be NULL.
size_t panoloc_result_len(const struct PanolocResult *result);

// Observations DBSCAN labelled as noise.
//
// # Safety
// `result` must come from [`panoloc_locate`] or be NULL.
size_t panoloc_result_noise(const struct PanolocResult *result);

// # Safety
// `result` must come from [`panoloc_locate`]; `out` must be valid for writes.
enum PanolocStatus panoloc_result_get(const struct PanolocResult *result,
                                      size_t index,
                                      struct PanolocObject *out);

// Class name of object `index`, owned by the result; NULL when out of range.
//
// # Safety
// `result` must come from [`panoloc_locate`] or be NULL.
const char *panoloc_result_class(const struct PanolocResult *result, size_t index);

// # Safety
// `result` must come from [`panoloc_locate`] and not be used afterwards.
void panoloc_result_free(struct PanolocResult *result);

// Runs every stage for one dataset of a TOML configuration and reports
// the number of located objects. Returns `Partial` when slices were skipped.
//
// # Safety
// Strings must be NUL-terminated; `object_count` may be NULL.
enum PanolocStatus panoloc_run_dataset(const char *config_path,
                                       const char *dataset_id,
                                       size_t *object_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PANOLOC_H */
