public static float celsiusToFahrenheit(float celsius) {
    float scaled = celsius * 9 / 5;
    return scaled + 32;
}
