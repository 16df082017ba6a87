public void setName(String name) {
    if (name == null) {
        throw new IllegalArgumentException("name");
    }
    this.name = name;
}
