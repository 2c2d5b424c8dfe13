#ifndef PWLITE_MATH_H
#define PWLITE_MATH_H

#define M_PI 3.14159265358979323846

double sqrt(double x);
double fabs(double x);
double pow(double x, double y);
double exp(double x);
double log(double x);
double log2(double x);
double log10(double x);
double sin(double x);
double cos(double x);
double tan(double x);
double atan(double x);
double atan2(double y, double x);
double floor(double x);
double ceil(double x);
double fmod(double x, double y);
double fmax(double x, double y);
double fmin(double x, double y);

#endif
